"""Adapter failures. The executor wraps any of these into a failed trace entry."""


class AdapterError(Exception):
    pass


class NameNotFound(AdapterError, LookupError):
    def __init__(self, name: str):
        super().__init__(f"place not in gazetteer: {name!r}")
        self.name = name


class FixtureMissing(AdapterError):
    pass


class SeriesTooShort(AdapterError):
    pass


class HorizonExceedsGuard(AdapterError):
    pass


class AllMissing(AdapterError):
    pass


class EmptyHistory(AdapterError):
    pass


class FewerThanTwoFixes(AdapterError):
    pass


class FewerThanTwoPoints(AdapterError):
    pass


class MissingDeparture(AdapterError):
    pass


class UnknownStop(AdapterError, LookupError):
    pass


class UnknownService(AdapterError, LookupError):
    pass


class NoMatch(AdapterError, LookupError):
    pass


class BadArgument(AdapterError, ValueError):
    """An argument the adapter cannot interpret (wrong shape or unparseable text)."""
