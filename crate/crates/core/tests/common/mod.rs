#![allow(dead_code)]

use quadmini::poly::Rational;

/// Published macro matrices, transcribed row by row.
pub const PRINTED_STANDARD: [[&str; 10]; 9] = [
    ["2/9", "2/9", "0", "0", "0", "0", "0", "0", "1/12", "1/12"],
    ["-2/9", "2/9", "2/9", "2/9", "0", "0", "0", "0", "0", "1/3"],
    ["0", "0", "-2/9", "2/9", "0", "0", "0", "0", "-1/12", "1/12"],
    ["2/9", "-2/9", "0", "0", "0", "0", "2/9", "2/9", "1/3", "0"],
    ["-2/9", "-2/9", "2/9", "-2/9", "2/9", "2/9", "-2/9", "2/9", "0", "0"],
    ["0", "0", "-2/9", "-2/9", "-2/9", "2/9", "0", "0", "-1/3", "0"],
    ["0", "0", "0", "0", "0", "0", "2/9", "-2/9", "1/12", "-1/12"],
    ["0", "0", "0", "0", "2/9", "-2/9", "-2/9", "-2/9", "0", "-1/3"],
    ["0", "0", "0", "0", "-2/9", "-2/9", "0", "0", "-1/12", "-1/12"],
];

pub const PRINTED_CORNER: [[&str; 10]; 9] = [
    ["4/15", "4/15", "0", "0", "0", "0", "0", "0", "1/12", "1/12"],
    ["-4/15", "8/45", "4/15", "4/15", "0", "0", "0", "0", "0", "1/3"],
    ["0", "0", "-4/15", "8/45", "0", "0", "0", "0", "-1/12", "1/12"],
    ["8/45", "-4/15", "0", "0", "0", "0", "4/15", "4/15", "1/3", "0"],
    [
        "-8/45", "-8/45", "8/45", "-4/15", "4/15", "4/15", "-4/15", "8/45", "0", "0",
    ],
    ["0", "0", "-8/45", "-8/45", "-4/15", "8/45", "0", "0", "-1/3", "0"],
    ["0", "0", "0", "0", "0", "0", "8/45", "-4/15", "1/12", "-1/12"],
    ["0", "0", "0", "0", "8/45", "-4/15", "-8/45", "-8/45", "0", "-1/3"],
    ["0", "0", "0", "0", "-8/45", "-8/45", "0", "0", "-1/12", "-1/12"],
];

pub const PRINTED_LINEAR: [[&str; 10]; 9] = [
    ["19/90", "19/90", "0", "0", "0", "0", "0", "0", "1/12", "1/12"],
    ["-19/90", "7/30", "19/90", "19/90", "0", "0", "0", "0", "0", "1/3"],
    ["0", "0", "-19/90", "7/30", "0", "0", "0", "0", "-1/12", "1/12"],
    ["7/30", "-19/90", "0", "0", "0", "0", "19/90", "19/90", "1/3", "0"],
    [
        "-7/30", "-7/30", "7/30", "-19/90", "19/90", "19/90", "-19/90", "7/30", "0", "0",
    ],
    ["0", "0", "-7/30", "-7/30", "-19/90", "7/30", "0", "0", "-1/3", "0"],
    ["0", "0", "0", "0", "0", "0", "7/30", "-19/90", "1/12", "-1/12"],
    ["0", "0", "0", "0", "7/30", "-19/90", "-7/30", "-7/30", "0", "-1/3"],
    ["0", "0", "0", "0", "-7/30", "-7/30", "0", "0", "-1/12", "-1/12"],
];

pub fn parse_matrix(m: &[[&str; 10]; 9]) -> Vec<Vec<Rational>> {
    m.iter()
        .map(|row| row.iter().map(|s| s.parse().expect("rational literal")).collect())
        .collect()
}

/// One printed row: `h1_u, h1_rate, l2_u, l2_rate, l2_p, p_rate`; rates are
/// NaN on the first level.
pub type PrintedRow = [f64; 6];

const N: f64 = f64::NAN;

pub const TABLE_EX1_CORNER: [PrintedRow; 6] = [
    [3.23129e-02, N, 3.03116e-03, N, 1.76150e-02, N],
    [1.58286e-02, 1.03, 8.24246e-04, 1.88, 7.00356e-03, 1.33],
    [7.79938e-03, 1.02, 2.06421e-04, 2.00, 2.50753e-03, 1.48],
    [3.87699e-03, 1.01, 5.12144e-05, 2.01, 8.78516e-04, 1.51],
    [1.93346e-03, 1.00, 1.27289e-05, 2.01, 3.08875e-04, 1.51],
    [9.65545e-04, 1.00, 3.17131e-06, 2.00, 1.08856e-04, 1.50],
];

pub const TABLE_EX1_LINEAR: [PrintedRow; 6] = [
    [3.16876e-02, N, 2.89325e-03, N, 1.17765e-02, N],
    [1.56503e-02, 1.02, 7.90369e-04, 1.87, 4.31789e-03, 1.45],
    [7.75922e-03, 1.01, 1.99983e-04, 1.98, 1.44890e-03, 1.58],
    [3.86716e-03, 1.00, 4.99365e-05, 2.00, 4.93948e-04, 1.55],
    [1.93102e-03, 1.00, 1.24544e-05, 2.00, 1.71287e-04, 1.53],
    [9.64934e-04, 1.00, 3.10849e-06, 2.00, 5.99594e-05, 1.51],
];

pub const TABLE_EX2_CORNER: [PrintedRow; 6] = [
    [6.96126e-01, N, 3.33821e-02, N, 2.25132e+00, N],
    [3.39100e-01, 1.04, 8.37772e-03, 1.99, 5.58680e-01, 2.01],
    [1.66684e-01, 1.02, 2.09556e-03, 2.00, 1.59539e-01, 1.81],
    [8.26546e-02, 1.01, 5.24458e-04, 2.00, 4.49273e-02, 1.83],
    [4.11633e-02, 1.01, 1.31193e-04, 2.00, 1.28191e-02, 1.81],
    [2.05425e-02, 1.00, 3.28081e-05, 2.00, 3.80370e-03, 1.75],
];

pub const TABLE_EX2_LINEAR: [PrintedRow; 6] = [
    [6.96024e-01, N, 3.23184e-02, N, 5.93926e+00, N],
    [3.35337e-01, 1.05, 7.82819e-03, 2.05, 4.04732e-01, 3.88],
    [1.65795e-01, 1.02, 1.97572e-03, 1.99, 6.07983e-02, 2.73],
    [8.24467e-02, 1.01, 4.97135e-04, 1.99, 1.78268e-02, 1.77],
    [4.11137e-02, 1.00, 1.24714e-04, 2.00, 5.88206e-03, 1.60],
    [2.05304e-02, 1.00, 3.12328e-05, 2.00, 1.98964e-03, 1.56],
];
