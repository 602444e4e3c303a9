class RetireError(Exception):
    pass


class NonConvergence(RetireError):
    '''Iteration budget exhausted; ``result`` holds the best iterate found.'''

    def __init__(self, max_iter, result=None, step=None):
        self.max_iter = max_iter
        self.result = result
        self.step = step
        msg = f"no convergence within {max_iter} iterations"
        if result is not None:
            msg += f" (kkt residual {result.kkt_residual:.3g})"
        if step is not None:
            msg += f" at reweighting step {step}"
        super().__init__(msg)


class DegenerateDesign(RetireError):
    pass


class InvalidWeight(RetireError, ValueError):
    pass


class SingularHessian(RetireError):
    pass


class AllZeroResiduals(RetireError):
    pass


class BracketFailure(RetireError):
    pass


class CsvError(RetireError, ValueError):
    pass


class MissingColumn(CsvError):
    pass


class NonNumericCell(CsvError):
    def __init__(self, row, col, text):
        self.row, self.col = row, col
        super().__init__(f"non-numeric cell {text!r} at row {row}, column {col}")


class RaggedRow(CsvError):
    def __init__(self, row, got, expected):
        self.row = row
        super().__init__(f"row {row} has {got} fields, expected {expected}")
