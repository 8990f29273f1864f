"""Exception types shared across the package."""


class Infeasible(Exception):
    """No assignment satisfies the constraints; carries a short reason."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class DepletionError(Exception):
    """A node's energy budget would go negative."""

    def __init__(self, node: int, deficit: float):
        super().__init__(f"node {node} energy budget short by {deficit:.6g} J")
        self.node = node
        self.deficit = deficit


class ConfigError(Exception):
    """A configuration file is missing, malformed, or carries unknown keys."""
