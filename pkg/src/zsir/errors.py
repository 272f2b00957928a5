class DataError(Exception):
    """Input data is malformed or inconsistent (bad file, bad record, bad id)."""


class ValidationError(DataError):
    """A structure violates one of its invariants (e.g. rank gaps in a run)."""
