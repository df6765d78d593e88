"""Exception hierarchy.

The CLI maps these onto exit codes: ``ValidationError`` -> 2, ``OSError`` -> 3,
``FitError`` -> 4.
"""


class ValidationError(ValueError):
    """Input data, flags or configuration violate a documented contract."""


class DatasetError(ValidationError):
    """A campaign dataset or CSV file is malformed.

    ``row`` is the 1-based line number in the source file (header = line 1)
    and ``column`` the column name, when the problem can be located.
    """

    def __init__(self, message, row=None, column=None):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column!r}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.row = row
        self.column = column


class FitError(RuntimeError):
    """A model could not be fitted on the data it was given."""

    def __init__(self, message, treatment=None):
        if treatment is not None:
            message = f"treatment {treatment}: {message}"
        super().__init__(message)
        self.treatment = treatment
