"""Shared exception types. The CLI maps these onto exit codes."""


class DataError(Exception):
    """Malformed or inconsistent input data (corpus files, vectors, config)."""


class StageError(Exception):
    """A pipeline stage failed; message carries the stage name."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
