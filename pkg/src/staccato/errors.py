"""Exception taxonomy shared by the library, the service, and the CLI."""


class StaccatoError(Exception):
    """Base class for all library errors."""


class AudioReadError(StaccatoError):
    """A WAV file could not be turned into samples."""


class CorruptHeaderError(AudioReadError):
    """The file is not a well-formed RIFF/WAVE container."""


class UnsupportedEncodingError(AudioReadError):
    """The container is fine but the codec is not PCM16/24/32 or IEEE float."""


class AnalysisError(StaccatoError):
    """An analysis precondition was violated (bad parameters, degenerate input)."""


class ConfigError(StaccatoError):
    """A configuration file or override is invalid."""
