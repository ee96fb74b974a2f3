"""Exception hierarchy shared by every module."""

import json
import os
import tempfile


class UnavoidError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(UnavoidError, ValueError):
    """Malformed input text. `line` is 1-based when known."""

    def __init__(self, msg, line=None):
        if line is not None:
            msg = f"line {line}: {msg}"
        super().__init__(msg)
        self.line = line


class PreconditionError(UnavoidError, ValueError):
    """An operation was called outside its stated hypotheses."""


class NoGuarantee(PreconditionError):
    """No implemented theorem covers this tree at this tournament order."""


class IncompleteEmbedding(UnavoidError, ValueError):
    """An embedding handed to the verifier does not cover every node."""


class EmbeddingFailure(UnavoidError, RuntimeError):
    """A construction failed inside a region where success is guaranteed.

    This always signals a bug. `dump` holds enough state to replay the run
    and `write_dump` persists it as JSON.
    """

    def __init__(self, msg, dump=None):
        super().__init__(msg)
        self.dump = dump or {}

    def write_dump(self, directory=None):
        fd, path = tempfile.mkstemp(prefix="unavoid-dump-", suffix=".json",
                                    dir=directory)
        with os.fdopen(fd, "w") as fh:
            json.dump({"error": str(self), **self.dump}, fh, default=_jsonable)
        return path


def _jsonable(x):
    if isinstance(x, (set, frozenset)):
        return sorted(x)
    if hasattr(x, "to_text"):
        return x.to_text()
    return repr(x)
