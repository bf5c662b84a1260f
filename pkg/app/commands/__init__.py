from app.commands.data import add_mask_parser, add_synth_parser, run_mask, run_synth
from app.commands.evaluate import add_evaluate_parser, add_probe_parser, run_evaluate, run_probe
from app.commands.replay import add_replay_parser
from app.commands.train import add_param_count_parser, add_train_parser, run_param_count, run_train

# handler for every command a run.json can name
HANDLERS = {
    "synth-data": run_synth,
    "mask": run_mask,
    "train": run_train,
    "evaluate": run_evaluate,
    "probe-swap": run_probe,
    "param-count": run_param_count,
}

PARSERS = [
    add_synth_parser,
    add_mask_parser,
    add_train_parser,
    add_evaluate_parser,
    add_probe_parser,
    add_param_count_parser,
    add_replay_parser,
]

__all__ = ["HANDLERS", "PARSERS"]
