import typer

from moseac.cli.commands import compare, evaluate, selfcheck, train


def register_commands(app: typer.Typer) -> None:
    app.command("train")(train.train)
    app.command("eval")(evaluate.evaluate)
    app.command("compare")(compare.compare)
    app.command("selfcheck")(selfcheck.selfcheck)
