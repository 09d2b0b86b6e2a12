import enum


class Intention(enum.Enum):
    PASS = "pass"
    STOP = "stop"

    @property
    def index(self) -> int:
        """Column of this intention in conditional probability tables."""
        return 0 if self is Intention.PASS else 1

    @classmethod
    def from_label(cls, label: str) -> "Intention":
        return cls(label.strip().lower())
