"""One module per adwb subcommand; each exposes NAME and command"""

from . import features, prep, protocol, report, score, train

__all__ = ["features", "prep", "protocol", "report", "score", "train"]
