"""Regenerates forcing_oracle.json: forcing-term values for random histories,
evaluated in 50-digit arithmetic with mpmath.

Usage: python3 gen_forcing_oracle.py > forcing_oracle.json
"""

import json
import random

from mpmath import mp, mpf, exp, log

mp.dps = 50

CFG = dict(eta0=0.5, eps0=1e-6, gamma=0.5, r=1.618, phi0=0.5,
           an_p1=0.1, an_p2=0.25, an_p3=0.75, botti_alpha=1.5)


def p_power(schedule, nu):
    v = mpf(nu)
    if schedule == "steep":
        p = 2 - mpf("2.5") / v * exp(-v)
    elif schedule == "exp":
        p = 2 - exp(1 - v ** mpf("0.7"))
    else:
        p = (v ** 3 + v ** 2 + v) / 250 + 1
    return min(mpf(2), p)


def phi_coeff(schedule, nu):
    v = mpf(nu)
    phi0, eps0 = mpf(CFG["phi0"]), mpf(CFG["eps0"])
    if schedule == "steep":
        phi = phi0 * exp(1 - v)
    elif schedule == "exp":
        phi = phi0 * exp(1 - v ** mpf("0.7"))
    else:
        phi = phi0 * ((-v ** 3 + v ** 2 + v) / 250 + 1)
    # capped at phi0 (only the cubic at nu = 1 exceeds it)
    return max(eps0, min(phi0, phi))


def oracle(label, h):
    nu = h["nu"]
    cur, prev = mpf(h["res_norm_current"]), mpf(h["res_norm_prev"])
    dis = mpf(h["disagreement_norm_prev"])
    lm = mpf(h["linear_model_residual_norm_prev"])
    change = mpf(h["residual_change_norm_prev"])
    a, p = mpf(h["actual_reduction_prev"]), mpf(h["predicted_reduction_prev"])
    eta_prev = mpf(h["eta_prev"])
    if label.startswith("fixed:"):
        return mpf(float(label[6:]))
    if label == "brownsaad":
        return mpf(1) / 2 ** nu
    if label == "ew1":
        return dis / prev
    if label == "ew2":
        return mpf(CFG["gamma"]) * (cur / prev) ** mpf(CFG["r"])
    if label == "an":
        t = a / p
        if t < mpf(CFG["an_p1"]):
            return 1 - 2 * mpf(CFG["an_p1"])
        if t < mpf(CFG["an_p2"]):
            return eta_prev
        if t < mpf(CFG["an_p3"]):
            return mpf("0.8") * eta_prev
        return mpf("0.5") * eta_prev
    if label == "botti":
        return lm / (lm + mpf(CFG["botti_alpha"]) * change)
    if label.startswith("inex1"):
        return (dis / prev) ** p_power(label[5:], nu)
    if label.startswith("inex2"):
        return phi_coeff(label[5:], nu) * (cur / prev) ** mpf(CFG["r"])
    raise ValueError(label)


def log_uniform(rng, lo, hi):
    return float(exp(rng.uniform(float(log(lo)), float(log(hi)))))


def history(rng):
    prev = log_uniform(rng, 1e-8, 1e2)
    cur = prev * log_uniform(rng, 1e-4, 1.2)
    eta_prev = log_uniform(rng, 1e-6, 0.9)
    lm = prev * eta_prev * rng.uniform(0.01, 1.0)
    return {
        "nu": rng.randint(1, 40),
        "res_norm_current": cur,
        "res_norm_prev": prev,
        "linear_model_residual_norm_prev": lm,
        "disagreement_norm_prev": prev * log_uniform(rng, 1e-6, 0.9),
        "residual_change_norm_prev": prev * rng.uniform(0.05, 1.5),
        "actual_reduction_prev": prev - cur,
        "predicted_reduction_prev": prev - lm,
        "eta_prev": eta_prev,
    }


LABELS = ["fixed:1e-4", "brownsaad", "ew1", "ew2", "an", "botti",
          "inex1steep", "inex1exp", "inex1cub", "inex2steep", "inex2exp", "inex2cub"]


def main():
    rng = random.Random(20240611)
    cases = []
    for _ in range(50):
        h = history(rng)
        cases.append({
            "inputs": h,
            "expected": {lab: mp.nstr(oracle(lab, h), 30) for lab in LABELS},
        })
    print(json.dumps({"digits": mp.dps, "config": CFG, "cases": cases}, indent=1))


if __name__ == "__main__":
    main()
