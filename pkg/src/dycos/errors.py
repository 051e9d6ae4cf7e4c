"""Exception hierarchy shared by all dycos modules."""


class DycosError(Exception):
    """Base class for every error raised by this package."""


class UnknownNode(DycosError, KeyError):
    def __init__(self, node):
        super().__init__(node)
        self.node = node

    def __str__(self):
        return f"unknown node {self.node!r}"


class UnknownEdge(DycosError, KeyError):
    def __init__(self, src, dst):
        super().__init__((src, dst))
        self.src = src
        self.dst = dst

    def __str__(self):
        return f"unknown edge {self.src!r} -> {self.dst!r}"


class NoLabeledNodes(DycosError):
    pass


class TooFewLabeledNodes(DycosError):
    pass


class AlreadyLabeled(DycosError):
    pass


class ZeroTotal(DycosError, ValueError):
    pass


class EmptyCorpus(DycosError):
    pass


class DeadEnd(DycosError):
    """No traversal neighbour to hop to."""


class NoContentPath(DycosError):
    """The node shares no vocabulary word with any structural node."""


class ParseError(DycosError, ValueError):
    def __init__(self, path, line, reason):
        super().__init__(f"{path}:{line}: {reason}")
        self.path = path
        self.line = line
        self.reason = reason


class OutOfOrderEvent(DycosError, ValueError):
    pass


class InvalidSpec(DycosError, ValueError):
    pass
