from cli.commands import build_parser, main, apply_runtime_defaults, ABLATION_ROWS

__all__ = ["build_parser", "main", "apply_runtime_defaults", "ABLATION_ROWS"]
