"""Values frozen from the independent oracles in oracles.py.

Regenerate with ``python3 tests/oracles.py``.  Spreads between Richardson
extrapolants were below 3e-13 for every entry.
"""

# shoot_reference(mu): fixed-step RK4 on the unscaled problem, Richardson h, h/2, h/4
SHOOT = {
    0.5: {
        "s_hat": -0.4537786357983946,
        "lambda_mu": 5.02804605626351,
        "Lambda": 1.1658199101647753,
        "E_value": 0.21617731393544742,
    },
    1.0: {
        "s_hat": 0.41329739298687085,
        "lambda_mu": 3.363187372529905,
        "Lambda": 4.050483325521517,
        "E_value": 0.9170641581674309,
    },
    2.0: {
        "s_hat": 1.9336049513627385,
        "lambda_mu": 0.87564887390514,
        "Lambda": 9.960264836104647,
        "E_value": 4.302580169947676,
    },
    1e-3: {
        "lambda_mu": 5.783182692344697,
        "Lambda": 4.896643361190734e-06,
    },
}

# sweep_reference on 10^4 nodes of [3.5, 4.5], recorded to 6 digits
MU_SHARP = 3.98460
LAMBDA_SHARP = 12.7039

# closed-form checks (scan + brentq on w, grid supremum of |w - eta0|)
R0_VALUE = 8.2473405142471
W_MINUS_ETA0_PLATEAU = 3.6449  # 2 + pi^2/6 to 4 digits
