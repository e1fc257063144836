"""Smoke test for the weightlab Python bindings.

Build and install first:
    pip install --no-build-isolation ./crates/python
"""

import json
import math

import weightlab_py as wl

CONSTANT = json.dumps({"kind": "constant"})
BETA_ONE = json.dumps({"kind": "standard", "beta": 1.0})


def close(a, b, tol=1e-10):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    # constant weight: moments 1/(x+1), classical Hilbert matrix
    assert close(wl.moment(CONSTANT, 3.0), 0.25)
    assert close(wl.tail(CONSTANT, 0.25), 0.75)
    h = wl.operator_matrix(CONSTANT, 8)
    for n in range(8):
        for k in range(8):
            assert close(h[n][k], 1.0 / (n + k + 1), 1e-12)

    # beta = 1: (1-r) has moments 1/((x+1)(x+2))
    assert close(wl.moment(BETA_ONE, 2.0), 1.0 / 12.0)

    out = wl.apply(CONSTANT, [1.0], 10)
    assert all(close(c, 1.0 / (n + 1)) for n, c in enumerate(out))

    coeffs = [0.5, -1.0, 2.0]
    assert close(wl.hardy_norm(coeffs, 2.0), math.sqrt(sum(c * c for c in coeffs)))
    assert close(wl.hl(coeffs, 2.0), math.sqrt(sum(c * c for c in coeffs)))

    try:
        wl.moment(json.dumps({"kind": "standard", "beta": -2.0}), 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("invalid weight accepted")

    report, status = wl.run(["probe", "lacunary", "--p", "0.5"])
    assert status == 0
    assert json.loads(report)["results"][0]["pass"] is True

    print("smoke test passed")


if __name__ == "__main__":
    main()
