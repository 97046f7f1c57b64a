"""Published calibration and norm values for the 25-item cCTt instrument.

Used as regression references and as realistic item banks for simulation.
Item Q2 is absent from the IRT parameter sets.
"""

import numpy as np

ITEMS_IRT = ('Q1', 'Q3', 'Q4', 'Q5', 'Q6', 'Q7', 'Q8', 'Q9', 'Q10', 'Q11', 'Q12', 'Q13', 'Q14', 'Q15', 'Q16', 'Q17', 'Q18', 'Q19', 'Q20', 'Q21', 'Q22', 'Q23', 'Q24', 'Q25')

# grade -> per item (difficulty, discrimination, difficulty at 62% success)
GRADE_2PL = {
    3: (
        (-2.55, 1.085, -2.099),
        (-1.44, 1.006, -0.954),
        (-1.055, 0.997, -0.564),
        (-0.618, 1.304, -0.242),
        (-1.278, 1.753, -0.998),
        (-0.43, 1.033, 0.044),
        (-0.367, 1.414, -0.021),
        (-0.924, 1.119, -0.487),
        (0.572, 1.416, 0.917),
        (0.304, 1.691, 0.593),
        (-0.186, 1.48, 0.145),
        (0.316, 1.776, 0.592),
        (0.697, 0.94, 1.218),
        (0.669, 1.432, 1.011),
        (-0.233, 1.192, 0.178),
        (2.075, 1.076, 2.53),
        (-0.364, 1.026, 0.113),
        (0.289, 0.95, 0.804),
        (1.027, 0.817, 1.626),
        (0.163, 1.048, 0.63),
        (0.664, 0.835, 1.25),
        (0.648, 0.834, 1.235),
        (2.801, 0.787, 3.423),
        (1.467, 1.061, 1.928),
    ),
    4: (
        (-2.95, 1.538, -2.632),
        (-2.175, 0.806, -1.568),
        (-1.606, 0.969, -1.101),
        (-1.329, 1.414, -0.983),
        (-2.03, 1.434, -1.689),
        (-1.073, 1.161, -0.651),
        (-1.148, 1.596, -0.841),
        (-1.65, 1.206, -1.244),
        (-0.174, 1.511, 0.15),
        (-0.285, 1.833, -0.018),
        (-0.723, 1.933, -0.47),
        (-0.375, 2.432, -0.174),
        (-0.241, 1.253, 0.15),
        (-0.242, 1.966, 0.007),
        (-0.801, 1.065, -0.341),
        (2.367, 0.854, 2.94),
        (-1.004, 1.042, -0.534),
        (-0.51, 0.914, 0.025),
        (0.492, 1.075, 0.948),
        (-0.236, 1.305, 0.14),
        (0.467, 0.939, 0.988),
        (0.13, 0.679, 0.851),
        (2.462, 0.926, 2.991),
        (0.955, 1.245, 1.349),
    ),
    5: (
        (-3.57, 1.158, -3.147),
        (-2.366, 0.944, -1.848),
        (-3.048, 0.652, -2.297),
        (-1.462, 1.135, -1.031),
        (-2.754, 1.715, -2.468),
        (-1.191, 0.825, -0.598),
        (-1.793, 1.255, -1.403),
        (-2.498, 1.049, -2.031),
        (-0.779, 1.348, -0.415),
        (-0.773, 1.941, -0.521),
        (-1.315, 2.649, -1.13),
        (-0.883, 2.059, -0.645),
        (-0.63, 1.048, -0.163),
        (-0.783, 1.673, -0.491),
        (-1.15, 1.233, -0.753),
        (0.634, 1.387, 0.987),
        (-1.51, 1.018, -1.029),
        (-1.094, 1.065, -0.634),
        (0.028, 1.173, 0.446),
        (-1.327, 1.415, -0.981),
        (-0.698, 1.276, -0.314),
        (-1.708, 0.565, -0.842),
        (0.658, 1.775, 0.934),
        (-0.18, 1.517, 0.142),
    ),
    6: (
        (-3.57, 1.158, -3.236),
        (-2.366, 0.944, -1.24),
        (-3.048, 0.652, -2.41),
        (-1.462, 1.135, -0.77),
        (-2.754, 1.715, -2.5),
        (-1.191, 0.825, -1.268),
        (-1.793, 1.255, -1.639),
        (-2.498, 1.049, -1.649),
        (-0.779, 1.348, -0.221),
        (-0.773, 1.941, -0.578),
        (-1.315, 2.649, -1.031),
        (-0.883, 2.059, -0.825),
        (-0.63, 1.048, -0.47),
        (-0.783, 1.673, -0.494),
        (-1.15, 1.233, -1.046),
        (0.634, 1.387, 1.191),
        (-1.51, 1.018, -1.287),
        (-1.094, 1.065, -0.524),
        (0.028, 1.173, 0.789),
        (-1.327, 1.415, -0.85),
        (-0.698, 1.276, 0.727),
        (-1.708, 0.565, -0.762),
        (0.658, 1.775, 1.144),
        (-0.18, 1.517, 0.514),
    ),
}

# single model over grades 3-6: (difficulty, discrimination, difficulty at 62%)
GRADE_AGNOSTIC_2PL = (
    (-2.913, 1.279, -2.53),
    (-2.036, 0.808, -1.43),
    (-1.707, 0.926, -1.178),
    (-1.175, 1.154, -0.75),
    (-1.896, 1.607, -1.592),
    (-1.033, 0.994, -0.54),
    (-1.079, 1.521, -0.758),
    (-1.514, 1.284, -1.132),
    (-0.182, 1.529, 0.138),
    (-0.339, 2.078, -0.104),
    (-0.779, 2.139, -0.55),
    (-0.42, 2.4, -0.216),
    (-0.223, 1.22, 0.178),
    (-0.232, 1.96, 0.017),
    (-0.801, 1.236, -0.405),
    (1.263, 1.267, 1.65),
    (-0.98, 1.201, -0.572),
    (-0.477, 1.127, -0.043),
    (0.422, 1.007, 0.908),
    (-0.524, 1.538, -0.205),
    (0.097, 0.978, 0.597),
    (-0.303, 1.001, 0.186),
    (1.357, 1.317, 1.728),
    (0.52, 1.429, 0.862),
)

# grade -> [(z, percentile)] for raw scores 0..25
NORMS = {
    3: (
        (-2.44, 0), (-2.24, 0),
        (-2.05, 1), (-1.86, 2),
        (-1.66, 4), (-1.47, 6),
        (-1.28, 10), (-1.09, 15),
        (-0.892, 20), (-0.699, 26),
        (-0.506, 32), (-0.313, 39),
        (-0.12, 45), (0.073, 52),
        (0.266, 59), (0.459, 67),
        (0.652, 73), (0.845, 78),
        (1.04, 83), (1.23, 87),
        (1.42, 90), (1.62, 94),
        (1.81, 96), (2.0, 98),
        (2.2, 99), (2.39, 100),
    ),
    4: (
        (-3.13, 0), (-2.92, 0),
        (-2.72, 0), (-2.52, 0),
        (-2.32, 1), (-2.12, 2),
        (-1.92, 3), (-1.71, 5),
        (-1.51, 7), (-1.31, 10),
        (-1.11, 15), (-0.906, 20),
        (-0.704, 25), (-0.502, 30),
        (-0.301, 36), (-0.0989, 42),
        (0.103, 49), (0.305, 58),
        (0.507, 66), (0.708, 74),
        (0.91, 80), (1.11, 85),
        (1.31, 90), (1.52, 95),
        (1.72, 97), (1.92, 99),
    ),
    5: (
        (-3.23, 0), (-3.04, 0),
        (-2.84, 0), (-2.65, 0),
        (-2.46, 0), (-2.27, 1),
        (-2.08, 3), (-1.89, 5),
        (-1.69, 7), (-1.5, 9),
        (-1.31, 11), (-1.12, 15),
        (-0.928, 19), (-0.736, 24),
        (-0.545, 29), (-0.353, 34),
        (-0.162, 40), (0.0301, 46),
        (0.222, 52), (0.413, 59),
        (0.605, 67), (0.797, 74),
        (0.988, 82), (1.18, 88),
        (1.37, 94), (1.56, 98),
    ),
    6: (
        (-3.33, 0), (-3.13, 0),
        (-2.93, 0), (-2.72, 0),
        (-2.52, 0), (-2.32, 1),
        (-2.11, 2), (-1.91, 3),
        (-1.71, 6), (-1.51, 8),
        (-1.3, 11), (-1.1, 15),
        (-0.897, 19), (-0.694, 24),
        (-0.491, 31), (-0.288, 38),
        (-0.0852, 45), (0.118, 51),
        (0.321, 57), (0.524, 64),
        (0.727, 71), (0.93, 79),
        (1.13, 86), (1.34, 92),
        (1.54, 97), (1.74, 99),
    ),
}

# grade -> (n, mean, sem, sd, skew, kurtosis, min, max)
DESCRIPTIVES = {
    3: (711, 12.6, 0.194, 5.18, 0.0206, -0.593, 0, 24),
    4: (749, 15.5, 0.181, 4.96, -0.354, -0.408, 0, 25),
    5: (585, 16.8, 0.216, 5.22, -0.489, -0.548, 3, 25),
    6: (624, 16.4, 0.197, 4.93, -0.416, -0.461, 1, 25),
}

CRONBACH_ALPHA = {3: 0.84, 4: 0.84, 5: 0.83, 6: 0.82}

EAP_RELIABILITY = {3: 0.849, 4: 0.842, 5: 0.798, 6: 0.78}

# participants by (gender, grade)
PARTICIPANTS = {
    "boys": {3: 376, 4: 379, 5: 289, 6: 317},
    "girls": {3: 333, 4: 369, 5: 296, 6: 307},
}

# model comparison per grade, Q2 excluded: grade -> {kind: (AIC, BIC, logLik)}, LRT, df, N
MODEL_FIT = {
    3: {"1PL": (18636.07, 18750.24, -9293.03), "2PL": (18592.46, 18811.66, -9248.23), "lrt": 89.61, "df": 23, "n": 711},
    4: {"1PL": (18081.03, 18196.50, -9015.52), "2PL": (17969.57, 18191.27, -8936.79), "lrt": 157.46, "df": 23, "n": 749},
    5: {"1PL": (11708.63, 11817.92, -5829.31), "2PL": (11624.36, 11834.20, -5764.18), "lrt": 130.26, "df": 23, "n": 585},
    6: {"1PL": (12967.41, 13078.31, -6458.70), "2PL": (12865.30, 13078.23, -6384.65), "lrt": 148.11, "df": 23, "n": 624},
}

# grade-agnostic proficiency levels (origin 0): level -> items, and % of students per grade
GRADE_AGNOSTIC_LEVELS = (
    ("Q1",),
    ("Q6", "Q3", "Q4", "Q9"),
    ("Q8", "Q5", "Q18", "Q12", "Q7", "Q16", "Q13", "Q21", "Q11", "Q19"),
    ("Q15", "Q10", "Q14", "Q23", "Q22"),
    ("Q25", "Q20", "Q17", "Q24"),
)
GRADE_AGNOSTIC_SPARSE = (True, False, False, False, True)
LEVEL_PERCENTAGES = {
    3: (8.7, 30.2, 37.4, 17.7, 5.9),
    4: (4.2, 16.7, 32.6, 31.2, 15.5),
    5: (1.0, 6.7, 22.4, 34.0, 35.6),
    6: (1.0, 7.2, 23.4, 36.2, 32.1),
}


def item_bank(grade: int | None = None):
    """``(items, a, b)`` arrays for one grade, or the grade-agnostic model."""
    rows = GRADE_AGNOSTIC_2PL if grade is None else GRADE_2PL[grade]
    b = np.array([r[0] for r in rows])
    a = np.array([r[1] for r in rows])
    return ITEMS_IRT, a, b
