"""Exception types shared by the file formats and the command line."""


class FormatError(ValueError):
    """A file does not follow the expected binary layout."""


class IntegrityError(FormatError):
    """Header and payload disagree."""
