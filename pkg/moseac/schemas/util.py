from typing import Any, List, Optional

from pydantic import BaseModel, Field

# ===============================================================
# STANDARDIZED COMMAND OUTCOME
# ===============================================================


class CommandResult(BaseModel):
    """
    Outcome of a CLI command, success or failure alike.
    """
    message: str = Field(..., description="Success message or error description.")
    code: Optional[str] = Field(default=None, description="Reference code (artifact path, error tag).")
    exit_code: int = Field(..., description="Process exit code.")
    result: Optional[List[Any]] = Field(default=None, description="Container for the command's results.")
