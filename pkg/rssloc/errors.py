class RsslocError(Exception):
    exit_code = 1


class InputError(RsslocError, ValueError):
    exit_code = 2


class SchemaError(InputError):
    pass


class ParseError(InputError):
    def __init__(self, row, message):
        self.row = row
        super().__init__(f"row {row}: {message}")


class UnknownBeaconError(InputError):
    def __init__(self, ids):
        self.ids = sorted(ids, key=str)
        listed = ", ".join(str(i) for i in self.ids)
        super().__init__(f"unknown beacon id(s): {listed}")


class GridConflictError(InputError):
    def __init__(self, label, first, second):
        self.label = label
        super().__init__(
            f"grid label {label!r} has conflicting coordinates {first} and {second}"
        )


class NoCommonBeaconsError(InputError):
    def __init__(self, message="no common beacons"):
        super().__init__(message)


class UndefinedSimilarityError(InputError):
    pass


class InfeasibleSelectionError(RsslocError):
    exit_code = 3

    def __init__(self, labels, eligible, s):
        self.labels = list(labels)
        self.eligible = eligible
        self.s = s
        shown = ", ".join(str(label) for label in self.labels)
        super().__init__(
            f"cannot select s={s} beacons (eligible: {eligible}) at grid point(s): {shown}"
        )


class InvariantViolation(RsslocError):
    exit_code = 4


class TooFewCandidatesError(InputError):
    def __init__(self, scored, k):
        self.scored = scored
        self.k = k
        super().__init__(f"only {scored} candidate(s) could be scored, fewer than k={k}")
