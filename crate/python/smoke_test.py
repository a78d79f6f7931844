"""Smoke test for the hsdfactor_py extension module.

Build first, then run from the repository root:

    cargo build --release -p hsdfactor-py --features extension-module
    python3 python/smoke_test.py

The script also picks up an installed module (for instance via maturin).
"""

import importlib.util
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    try:
        import hsdfactor_py

        return hsdfactor_py
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libhsdfactor_py.so"
        if lib.exists():
            spec = importlib.util.spec_from_file_location("hsdfactor_py", lib)
            module = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(module)
            return module
    sys.exit("hsdfactor_py not found; build it with --features extension-module")


def main():
    h = load()

    assert h.weight_box([2, 1]) == [[2, 1], [2, 0], [1, 1], [1, 0]]
    assert h.count_paths([0, 0], [2, 1]) == 2
    assert h.verify_path_independence([0, 0, 0], [2, 1, 1])

    cert = h.Certificate([1, 0], 2)
    assert cert.residual_terms == 0 and cert.is_sound()
    assert dict((tuple(w), c) for w, c in cert.coefficients) == {(0, 0): "1/1", (1, 0): "-1/1"}
    assert cert.to_dict()["power"] == 2

    assert h.spinor_dims([2, 1], 5) == (64, 64)

    r1 = h.HsdOperator([1], 3)
    assert r1.fibre_dim == 4
    assert max(r1.kernel_polyharmonic_orders(2)) == 2

    assert h.verify_identities([1], 3, 2)["pass"]
    assert h.verify_factorization([1], 2, 3, 4)["pass"]
    assert h.verify_induction(1, 2, 3)["pass"]
    assert h.verify_corollary([1], 3, 3)["pass"]

    try:
        h.Certificate([1, 2], 2)
    except ValueError:
        pass
    else:
        raise AssertionError("non-dominant weight accepted")

    print("hsdfactor_py smoke test passed")


if __name__ == "__main__":
    main()
