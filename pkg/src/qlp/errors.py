class DomainError(ValueError):
    """A precondition failure carrying a module-qualified error code.

    The code (e.g. ``"qsvm.degenerate_labels"``) is what the CLI reports in
    its machine-readable error payload.
    """

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message}
