"""Exception types shared across the package."""


class BotmeterError(Exception):
    """Base class for all botmeter errors."""


class PcapFormatError(BotmeterError):
    """Raised for capture files that are not classic pcap."""


class CsvFormatError(BotmeterError):
    """Raised for malformed CSV inputs (missing columns, ragged rows, bad cells)."""


class ValidationError(BotmeterError):
    """Raised when an operation is called with arguments outside its contract."""
