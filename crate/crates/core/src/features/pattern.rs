//! Sampling pattern for the binary descriptor: 256 point pairs
//! `[x1, y1, x2, y2]` drawn once from an isotropic Gaussian (σ = 6.6 px),
//! rounded to integers and kept inside a radius-15 disk so every rotation
//! stays within a 31×31 patch.

pub const PATTERN: [[i8; 4]; 256] = [
    [5, 12, -1, -4],
    [0, -4, -3, 7],
    [3, 6, 5, 12],
    [-3, -1, -3, 5],
    [-6, -9, -6, -8],
    [11, 1, 12, 1],
    [2, 6, -6, -10],
    [7, 3, -6, -1],
    [-6, -10, -6, -8],
    [-7, -3, -4, 2],
    [-5, -12, 3, 3],
    [6, 7, 4, 4],
    [7, -1, -10, -9],
    [-2, -4, 2, 10],
    [9, -3, 8, -1],
    [1, -2, 8, -3],
    [-9, -3, 2, 6],
    [3, -4, -1, 4],
    [3, -7, -2, 4],
    [-7, -3, -1, 3],
    [5, -6, 1, -2],
    [-1, 4, 1, -1],
    [-5, -3, -11, 4],
    [-1, 1, 6, 4],
    [8, 9, 8, -1],
    [3, 1, 6, -9],
    [-3, 2, 0, -1],
    [6, -6, -5, -8],
    [-1, 0, 4, -1],
    [5, -7, -5, 9],
    [0, -7, 6, 10],
    [2, 2, 4, 0],
    [3, 1, -4, -9],
    [5, 3, 0, 5],
    [1, 3, 8, 12],
    [7, 5, -2, 5],
    [-10, -11, 8, -1],
    [-7, 10, -1, -3],
    [7, -4, 5, 4],
    [6, 3, 4, 9],
    [-1, 11, -8, -3],
    [-1, 1, -7, 4],
    [-11, 0, 14, -5],
    [-1, 7, -8, -5],
    [-4, 1, -1, -2],
    [1, -3, -9, -4],
    [-13, -4, 6, -5],
    [4, -2, 10, -5],
    [1, -5, 5, 9],
    [-8, -9, 6, -12],
    [15, 0, 9, 8],
    [10, 2, -1, 3],
    [-4, -2, -6, 0],
    [8, -5, -7, 0],
    [-3, 1, 2, 7],
    [-5, 6, -8, -5],
    [6, 1, 9, -5],
    [3, 1, 0, 10],
    [-5, -10, 6, 0],
    [-8, -2, 2, -9],
    [8, 8, 0, 13],
    [-1, 4, 0, -3],
    [-11, -3, -1, -8],
    [6, 5, 3, -4],
    [3, -5, 11, -8],
    [12, -6, -3, -11],
    [9, 6, -9, 6],
    [6, -9, 12, 0],
    [-5, -5, 7, -10],
    [1, -4, -1, 9],
    [3, -1, -1, -2],
    [8, 5, 4, 1],
    [-5, 3, -7, 9],
    [-7, -6, -6, 1],
    [1, -11, 11, -3],
    [9, 3, 3, -5],
    [0, -8, 0, 0],
    [5, -6, -5, 1],
    [-1, -7, 3, 5],
    [3, -3, 11, -2],
    [-7, -2, 4, -5],
    [6, -2, -3, 5],
    [-4, 5, 6, 0],
    [-7, -6, -8, -1],
    [6, -9, 6, 4],
    [12, -8, 2, 8],
    [2, 5, -9, -2],
    [-8, -5, 11, 1],
    [-2, -1, -7, -1],
    [-9, -2, -9, -7],
    [3, -11, 3, 1],
    [2, 5, 5, -9],
    [11, -6, -7, -8],
    [-2, 2, 3, 11],
    [-1, -9, -1, 7],
    [-4, 2, 10, -6],
    [-4, -9, 3, -6],
    [-1, -6, -1, -9],
    [5, 9, 9, -10],
    [3, -4, -14, 3],
    [6, -5, -9, -5],
    [-4, 8, -7, 5],
    [4, 4, -3, 7],
    [1, -10, -6, 8],
    [10, 5, 3, 1],
    [2, 0, -11, -5],
    [-6, 3, -12, 3],
    [0, 5, -3, 2],
    [-3, 12, -2, -5],
    [11, -4, -12, 2],
    [-6, 5, 3, -1],
    [-1, 13, 5, -10],
    [-3, 1, 1, 6],
    [-3, 0, 0, -4],
    [0, 7, 3, -7],
    [0, -6, 3, -9],
    [1, -1, 2, 0],
    [5, -6, 1, -4],
    [-9, 3, 4, -8],
    [-1, -3, -3, 1],
    [10, 2, -4, -4],
    [11, -3, -1, 1],
    [9, 4, 4, 2],
    [-14, -2, -10, 6],
    [7, -2, 1, 0],
    [-4, 2, 8, -3],
    [-1, -8, -2, -4],
    [2, 8, -3, 1],
    [-3, -4, 5, 4],
    [10, 0, -7, 2],
    [-2, -2, -8, 5],
    [9, 5, 1, 5],
    [-3, -4, 8, 2],
    [1, 7, 6, -13],
    [-8, -5, 9, -5],
    [6, 1, -6, -5],
    [-10, 2, 10, 1],
    [-6, -3, 2, -3],
    [3, 5, 7, 1],
    [-7, 1, -5, 2],
    [7, 0, -10, 1],
    [-8, 11, -7, -2],
    [4, -4, -3, 4],
    [0, -3, -2, -2],
    [4, -9, 3, 2],
    [9, 2, -9, 1],
    [-1, 0, 8, -4],
    [5, -4, -1, 3],
    [4, 3, 2, -13],
    [-3, 7, -4, 7],
    [-3, 4, -2, -8],
    [-4, 8, 7, -13],
    [8, 8, 11, -2],
    [1, -5, -4, 2],
    [8, 0, -3, 2],
    [-4, -1, 5, 7],
    [0, -1, 7, 5],
    [-1, 6, -5, 10],
    [-4, -4, -2, -11],
    [12, -1, 0, 1],
    [0, 6, -2, -2],
    [1, -4, 9, -1],
    [-8, -1, -2, -4],
    [2, 4, -12, 2],
    [10, 10, 5, -12],
    [8, -6, -2, 0],
    [-8, -3, -5, 1],
    [-1, -6, 4, -3],
    [-4, 9, 1, -5],
    [0, 8, 3, -2],
    [0, -2, -1, -1],
    [2, 12, -5, 4],
    [1, 5, 1, 11],
    [7, 5, -1, 0],
    [-3, -4, 1, -5],
    [-6, -4, -4, 8],
    [-6, 1, 5, -5],
    [-2, 0, 2, -5],
    [-2, 3, 10, 10],
    [-5, -9, 7, 9],
    [-10, -4, 11, -7],
    [9, -2, -4, -6],
    [-4, 4, -6, 1],
    [-2, -1, 0, 3],
    [-6, -1, 4, -2],
    [-2, -2, 12, -9],
    [1, 1, 5, 6],
    [-6, -9, -1, 9],
    [-9, 2, 9, 7],
    [-5, -6, 3, -2],
    [-5, -2, 1, -9],
    [-7, -10, 12, 5],
    [-4, 5, 3, 2],
    [0, 1, 12, 4],
    [-8, 2, -9, 5],
    [5, 3, -2, -6],
    [-10, 5, -2, -2],
    [7, -4, 5, 6],
    [2, -1, -3, -1],
    [9, 10, -8, -1],
    [-12, -8, -3, 2],
    [1, -4, 4, -8],
    [-3, 2, 0, 0],
    [-1, -8, -1, -7],
    [-6, -2, 5, -1],
    [3, -5, -6, 2],
    [-1, 2, -7, -5],
    [-6, -6, -7, -4],
    [4, -2, 0, 3],
    [7, -4, 3, 10],
    [8, 9, 4, 2],
    [7, -7, 8, -11],
    [-13, -7, -1, -4],
    [-2, -11, 11, -10],
    [1, -10, 7, 3],
    [-1, -1, 11, 0],
    [-1, 8, -2, -1],
    [-8, 6, -6, 7],
    [-4, -13, 7, -7],
    [-4, 0, 3, 1],
    [-10, -5, -7, 1],
    [-3, -3, -9, -4],
    [-7, -4, -10, -9],
    [4, 3, 1, 10],
    [3, 4, -3, 8],
    [0, -4, 9, 6],
    [-8, 1, 0, 1],
    [-9, -3, -4, -9],
    [-10, 0, -2, -2],
    [12, 2, 3, 1],
    [10, 3, 2, 9],
    [5, -8, 4, -5],
    [0, 2, 7, -2],
    [7, 1, 1, 6],
    [9, -8, 5, -8],
    [-8, -2, 2, 1],
    [-6, 5, -8, 9],
    [-1, -4, -9, 2],
    [9, 3, 9, -6],
    [0, -2, 6, 4],
    [3, 3, -5, -8],
    [-6, -8, -11, -5],
    [-4, 8, -2, 8],
    [-6, -3, 3, 0],
    [-4, 9, 1, -1],
    [7, -3, -1, -7],
    [7, -6, 6, -6],
    [2, -7, 4, 0],
    [8, 6, 7, 3],
    [3, 0, 10, -7],
    [4, 10, 0, 11],
    [-8, 5, 6, -2],
    [-4, -14, -4, 3],
    [4, 14, -6, 0],
    [-3, 3, 0, -1],
    [-8, 8, -2, 9],
];
