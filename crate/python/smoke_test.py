"""Smoke test for the fockskin extension module.

Build and install first:
    pip install --no-build-isolation ./crates/py
then run:
    python3 python/smoke_test.py
"""

import json
import math

import fockskin


def check(cond, msg):
    if not cond:
        raise AssertionError(msg)
    print(f"ok  {msg}")


def main():
    p = fockskin.ModelParams(1.5, j2=1.0, j3=3.0, gamma=50.0, phi=math.pi / 2)
    c = p.couplings()
    check(abs(c["g"] - 0.18) < 1e-15, "g = J3^2 / gamma")
    check(abs(c["alpha2"] - fockskin.ModelParams(1.5, j3=3.0, phi=-math.pi / 2).couplings()["alpha1"]) < 1e-15,
          "alpha2(phi) = alpha1(-phi)")

    eig = fockskin.analytic_eigenset(p, 20)
    check(len(eig) == 41, "41 modes for n_modes = 20")
    check(eig.modes()[0] == (0, "zero", 0.0), "zero mode first")
    check(abs(eig.energy(3, "plus") - 2.0) < 1e-15, "E(3, +) = 2 J2")
    check(eig.max_residual() < 1e-8, "analytic residual below 1e-8")
    check(eig.biorthonormality_error() < 1e-8, "left/right biorthonormal")
    dist = eig.cell_distribution(0, "zero")
    check(abs(sum(dist) - 1.0) < 1e-12, "cell distribution normalized")
    r, l = eig.right(2, "minus"), eig.left(2, "minus")
    check(abs(sum(a.conjugate() * b for a, b in zip(l, r)) - 1.0) < 1e-10, "<L|R> = 1")

    run = fockskin.evolve_site(fockskin.ModelParams(0.6, j3=3.0, phi=math.pi / 2), 10, t_end=10.0, t_steps=101)
    check(abs(run["survival"][-1] - 0.148292529315) < 1e-9, "survival regression at t = 10")
    check(all(abs(sum(d) - 1.0) < 1e-10 for d in run["distributions"]), "dynamics slices normalized")

    chain = fockskin.solve_uniform(fockskin.ModelParams(0.6, j3=3.0, phi=math.pi / 2), 100)
    zeros = [e for e in chain.energies() if abs(e) < 1e-6]
    check(len(zeros) == 2, "two uniform-chain zero modes")
    check(chain.max_residual() < 1e-8, "uniform residual below 1e-8")
    try:
        fockskin.solve_uniform(fockskin.ModelParams(0.1, j3=3.0, phi=math.pi / 2), 10)
        raise AssertionError("gauge reduction should be rejected")
    except fockskin.FockskinError as e:
        check("gauge reduction invalid" in str(e), "invalid gauge raises FockskinError")

    check(fockskin.max_cells(0.05) == 40, "max_cells(0.05) = 40")
    report = fockskin.proposal_check(fockskin.ModelParams(0.6, j3=3.0, phi=math.pi / 2), 10, 0.05)
    check(report["feasible"] and report["max_occupied_cell"] <= 25, "proposal feasible")

    text, ok = fockskin.run_cli(["validate"])
    check(ok and json.loads(text)["all_pass"], "validate passes through the CLI entry point")

    try:
        fockskin.ModelParams(1.0, j2=-1.0)
        raise AssertionError("negative J2 should be rejected")
    except ValueError:
        check(True, "invalid parameters raise ValueError")

    print("smoke test passed")


if __name__ == "__main__":
    main()
