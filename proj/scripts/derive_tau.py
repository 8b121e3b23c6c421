#!/usr/bin/env python3
"""Derive the RBT penalty tau for a detection probability, independently of the C++ code.

For unit Gaussian errors the expected objective of a constant bound b is

    J(b) = E[(b - |e|)^2 ; |e| <= b] + tau * E[(|e| - b)^2 ; |e| > b]

and tau is chosen so that J is stationary at b* = Phi^-1(1 - (1 - p_d) / 2).
Setting dJ/db = 0 at b* gives tau = A / B with

    A = integral_0^b* (b* - x) 2 phi(x) dx
    B = integral_b*^inf (x - b*) 2 phi(x) dx
"""

import argparse

from scipy import integrate, optimize, stats


def tau_for(pd: float) -> tuple[float, float]:
    b = stats.norm.ppf(1.0 - (1.0 - pd) / 2.0)
    pdf = stats.norm.pdf
    a, _ = integrate.quad(lambda x: (b - x) * 2.0 * pdf(x), 0.0, b, epsabs=1e-14, epsrel=1e-13)
    t, _ = integrate.quad(lambda x: (x - b) * 2.0 * pdf(x), b, b + 40.0, epsabs=1e-16, epsrel=1e-13)
    return a / t, float(b)


def objective(bound: float, tau: float) -> float:
    pdf = stats.norm.pdf
    held, _ = integrate.quad(lambda x: (bound - x) ** 2 * 2.0 * pdf(x), 0.0, bound)
    failed, _ = integrate.quad(lambda x: (x - bound) ** 2 * 2.0 * pdf(x), bound, bound + 40.0)
    return held + tau * failed


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pd", type=float, default=0.9973)
    args = parser.parse_args()
    tau, b = tau_for(args.pd)
    res = optimize.minimize_scalar(objective, bounds=(0.5 * b, 1.5 * b), args=(tau,),
                                   method="bounded", options={"xatol": 1e-10})
    print(f"p_d={args.pd!r}")
    print(f"tau={tau!r}")
    print(f"ideal_bound={b!r}")
    print(f"minimizer={float(res.x)!r}")


if __name__ == "__main__":
    main()
