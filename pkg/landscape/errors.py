class LandscapeError(Exception):
    """도메인 오류의 기본 클래스. CLI는 to_dict() 결과를 stderr에 JSON으로 출력한다."""

    def to_dict(self):
        return {"error": type(self).__name__, "message": str(self)}


class NonHermitianInput(LandscapeError):
    pass


class NonHermitianDirection(LandscapeError):
    pass


class SymmetryViolation(LandscapeError):
    pass


class NonUnitary(LandscapeError):
    pass


class DimensionMismatch(LandscapeError):
    pass


class InvalidState(LandscapeError):
    pass


class ConstantOperator(LandscapeError):
    pass


class NotPOVM(LandscapeError):
    pass


class ParseError(LandscapeError):
    def __init__(self, message, path=None, line=None, field=None):
        super().__init__(message)
        self.path = None if path is None else str(path)
        self.line = line
        self.field = field

    def to_dict(self):
        payload = super().to_dict()
        payload.update({"path": self.path, "line": self.line, "field": self.field})
        return payload


class NotCommuting(LandscapeError):
    pass


class TooLarge(LandscapeError):
    pass


class BlockMismatch(LandscapeError):
    pass


class NotLocalMax(LandscapeError):
    pass


class WrongM(LandscapeError):
    pass


class NotDistinguishable(LandscapeError):
    pass


class OutOfRange(LandscapeError):
    pass


class IoError(LandscapeError):
    pass
