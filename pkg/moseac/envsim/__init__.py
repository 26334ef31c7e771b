from moseac.envsim.simulator import ElasticRaceEnv, VariableStepEnv
from moseac.envsim.track import dump_track, load_track, make_track, parse_track, stadium_track

__all__ = [
    "ElasticRaceEnv", "VariableStepEnv",
    "load_track", "parse_track", "dump_track", "make_track", "stadium_track",
]
