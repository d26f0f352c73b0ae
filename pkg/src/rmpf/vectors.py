"""Embedded worked example (p = 104729, 5x3) and a cell-by-cell replay checker."""

from __future__ import annotations

import copy
from dataclasses import dataclass

from .core import ExpMatrix
from .kap import PrivateKey, PublicParams, derive_key, make_token

TOY = {
    "p": 104729,
    "base": [[51141, 16202, 66646], [4601, 73510, 9641], [41977, 29822, 28262],
             [61281, 20522, 40337], [25689, 35123, 17039]],
    "x": [[27536, 23259, 3230], [97577, 61064, 52197], [61356, 19870, 66794],
          [93047, 74112, 73769], [88730, 84531, 46584]],
    "y": [[7991, 99112, 88031], [62951, 45825, 26429], [53671, 81823, 10939],
          [92791, 39779, 100242], [67646, 52695, 65391]],
    "lambda_a": 35413,
    "omega_a": 22911,
    "lambda_b": 77591,
    "omega_b": 9608,
    # unreduced integer products as printed
    "a1": [[975132368, 823670967, 114383990], [3455494301, 2162459432, 1848452361],
           [2172800028, 703656310, 2365375922], [3295073411, 2624528256, 2612381597],
           [3142195490, 2993496303, 1649679192]],
    "b1": [[183081801, 2270755032, 2016878241], [1442270361, 1049896575, 605514819],
           [1229656281, 1874646753, 250623429], [2125934601, 911376669, 2296644462],
           [1549837506, 1207295145, 1498173201]],
    "a2": [[2136545776, 1804689069, 250618930], [7571097007, 4738016824, 4050017427],
           [4760673396, 1541733170, 5182613254], [7219609777, 5750424192, 5723810479],
           [6884649430, 6558844821, 3614499144]],
    "b2": [[76777528, 952268096, 845801848], [604833208, 440286600, 253929832],
           [515670968, 786155384, 105101912], [891535928, 382196632, 963125136],
           [649942768, 506293560, 628276728]],
    "token_a": [[90444, 78140, 22111], [91141, 86834, 31963], [22517, 82376, 27232],
                [76737, 17315, 37169], [95799, 99846, 20180]],
    "token_b": [[25880, 18100, 3262], [66621, 6366, 37099], [77233, 4706, 92229],
                [41946, 98748, 61670], [61540, 92962, 89447]],
    "key_a": [[76099, 14814, 8343], [58724, 39308, 74495], [26031, 18945, 38075],
              [90635, 51524, 65266], [23296, 83580, 22846]],
    "key_b": [[76099, 14814, 8343], [58724, 39308, 74495], [26031, 18945, 38075],
              [90635, 51524, 65266], [23296, 83580, 22846]],
}


def toy_fixture() -> dict:
    return copy.deepcopy(TOY)


def toy_params(fx: dict | None = None) -> PublicParams:
    fx = fx or TOY
    return PublicParams.from_values(fx["p"], fx["base"], fx["x"], fx["y"])


def toy_keys(fx: dict | None = None) -> tuple[PrivateKey, PrivateKey]:
    fx = fx or TOY
    params = toy_params(fx)
    return (PrivateKey.from_scalars(params, fx["lambda_a"], fx["omega_a"]),
            PrivateKey.from_scalars(params, fx["lambda_b"], fx["omega_b"]))


@dataclass(frozen=True)
class CellCheck:
    figure: str
    label: str
    row: int
    col: int
    expected: int
    actual: int

    @property
    def ok(self) -> bool:
        return self.expected == self.actual

    def __str__(self):
        status = "OK" if self.ok else f"MISMATCH (got {self.actual})"
        return f"{self.figure} {self.label} ({self.row},{self.col}): {self.expected} {status}"


def _cells(figure, label, expected, actual):
    return [CellCheck(figure, label, i + 1, j + 1, e, a)
            for i, (er, ar) in enumerate(zip(expected, actual))
            for j, (e, a) in enumerate(zip(er, ar))]


def check_vectors(fx: dict | None = None) -> list[CellCheck]:
    """Replay the example from `fx` (default: embedded) and compare every cell."""
    fx = fx or TOY
    params = toy_params(fx)
    q = params.q
    alice, bob = toy_keys(fx)
    checks = []
    # exponent matrices: printed values are unreduced, compare residues
    for label, priv_m in (("A1", alice.a), ("B1", alice.b)):
        printed = ExpMatrix.reduce(fx[label.lower()], q)
        checks += _cells("Figure 3", label, printed.rows, priv_m.rows)
    for label, priv_m in (("A2", bob.a), ("B2", bob.b)):
        printed = ExpMatrix.reduce(fx[label.lower()], q)
        checks += _cells("Figure 5", label, printed.rows, priv_m.rows)
    ta = make_token(params, alice)
    tb = make_token(params, bob)
    checks += _cells("Figure 4", "TokenA", fx["token_a"], ta.matrix.rows)
    checks += _cells("Figure 6", "TokenB", fx["token_b"], tb.matrix.rows)
    checks += _cells("Figure 7", "KeyA", fx["key_a"], derive_key(params, alice, tb).matrix.rows)
    checks += _cells("Figure 7", "KeyB", fx["key_b"], derive_key(params, bob, ta).matrix.rows)
    return checks
