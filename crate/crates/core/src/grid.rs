//! Grids of color codes: well-formedness rules, color permutations and
//! canonical hashing.
//!
//! A [`Grid`] is always valid once constructed. Untrusted matrices (from
//! JSON files or a runner process) enter as a [`RawMatrix`] and pass through
//! [`validate_grid`] first.

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

/// Upper bound on either side of an input grid.
pub const MAX_INPUT_SIDE: usize = 30;

/// One of the ten fixed palette entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Color(u8);

impl Color {
    pub const NAMES: [&'static str; 10] = [
        "Black", "Blue", "Red", "Green", "Yellow", "Grey", "Pink", "Orange", "Teal", "Maroon",
    ];

    pub fn new(code: u8) -> Option<Self> {
        (code <= 9).then_some(Color(code))
    }

    pub fn code(self) -> u8 {
        self.0
    }

    pub fn name(self) -> &'static str {
        Self::NAMES[self.0 as usize]
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which side of a pair a grid sits on. Inputs carry the 30x30 bound,
/// outputs only the 1x1 floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridRole {
    Input,
    Output,
}

/// Outcome of [`validate_grid`]. Failing variants carry the first offending
/// `(row, col)` coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum GridVerdict {
    Valid,
    Ragged { row: usize },
    InvalidValue { row: usize, col: usize },
    InvalidSize { height: usize, width: usize },
}

impl GridVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, GridVerdict::Valid)
    }
}

impl fmt::Display for GridVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridVerdict::Valid => write!(f, "valid"),
            GridVerdict::Ragged { row } => write!(f, "ragged grid: row {row} length differs from row 0"),
            GridVerdict::InvalidValue { row, col } => {
                write!(f, "invalid cell value at ({row}, {col}); expected an integer in 0..=9")
            }
            GridVerdict::InvalidSize { height, width } => {
                write!(f, "invalid grid size {height}x{width}")
            }
        }
    }
}

/// An untrusted matrix. Cells are `None` where the source held something
/// that is not an integer.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawMatrix {
    pub rows: Vec<Vec<Option<i64>>>,
    /// Set when the source was not an array of arrays at all; the index is
    /// the first row that was not an array.
    pub non_array_row: Option<usize>,
}

impl RawMatrix {
    pub fn from_rows(rows: Vec<Vec<i64>>) -> Self {
        RawMatrix {
            rows: rows.into_iter().map(|r| r.into_iter().map(Some).collect()).collect(),
            non_array_row: None,
        }
    }

    /// Reads any JSON value as a matrix without rejecting anything; the
    /// verdict is left to [`validate_grid`].
    pub fn from_json(value: &serde_json::Value) -> Self {
        let Some(rows) = value.as_array() else {
            return RawMatrix { rows: Vec::new(), non_array_row: Some(0) };
        };
        let mut out = Vec::with_capacity(rows.len());
        let mut non_array_row = None;
        for (r, row) in rows.iter().enumerate() {
            match row.as_array() {
                Some(cells) => out.push(cells.iter().map(|c| c.as_i64()).collect()),
                None => {
                    non_array_row.get_or_insert(r);
                    out.push(Vec::new());
                }
            }
        }
        RawMatrix { rows: out, non_array_row }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    serde_json::Value::Array(
                        r.iter()
                            .map(|c| c.map_or(serde_json::Value::Null, serde_json::Value::from))
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

/// Checks shape, value range and (for inputs) the size bound.
///
/// Raggedness is reported before bad values, and bad values before size, so
/// the verdict is stable regardless of which defect a caller fixes first.
pub fn validate_grid(raw: &RawMatrix, role: GridRole) -> GridVerdict {
    if let Some(row) = raw.non_array_row {
        if raw.rows.is_empty() {
            return GridVerdict::InvalidSize { height: 0, width: 0 };
        }
        return GridVerdict::Ragged { row };
    }
    let height = raw.rows.len();
    let width = raw.rows.first().map_or(0, Vec::len);
    if let Some(row) = raw.rows.iter().position(|r| r.len() != width) {
        return GridVerdict::Ragged { row };
    }
    for (r, row) in raw.rows.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            if !matches!(cell, Some(v) if (0..=9).contains(v)) {
                return GridVerdict::InvalidValue { row: r, col: c };
            }
        }
    }
    let too_large = role == GridRole::Input && (height > MAX_INPUT_SIDE || width > MAX_INPUT_SIDE);
    if height == 0 || width == 0 || too_large {
        return GridVerdict::InvalidSize { height, width };
    }
    GridVerdict::Valid
}

/// A rectangular, non-empty matrix of colors stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Grid {
    height: usize,
    width: usize,
    cells: Vec<Color>,
}

impl Grid {
    /// Validates `raw` under `role` and builds the grid.
    pub fn from_raw(raw: &RawMatrix, role: GridRole) -> Result<Self, GridVerdict> {
        match validate_grid(raw, role) {
            GridVerdict::Valid => {}
            bad => return Err(bad),
        }
        let height = raw.rows.len();
        let width = raw.rows[0].len();
        let cells = raw
            .rows
            .iter()
            .flatten()
            .map(|c| Color(c.expect("validated") as u8))
            .collect();
        Ok(Grid { height, width, cells })
    }

    /// Builds a grid from integer rows, applying output-role rules (no upper
    /// size bound).
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self, GridVerdict> {
        let raw = RawMatrix::from_rows(
            rows.iter().map(|r| r.as_ref().iter().map(|&v| v as i64).collect()).collect(),
        );
        Grid::from_raw(&raw, GridRole::Output)
    }

    /// A grid of a single color.
    pub fn filled(height: usize, width: usize, color: Color) -> Self {
        assert!(height >= 1 && width >= 1, "grids are at least 1x1");
        Grid { height, width, cells: vec![color; height * width] }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn get(&self, row: usize, col: usize) -> Color {
        self.cells[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, color: Color) {
        self.cells[row * self.width + col] = color;
    }

    pub fn cells(&self) -> &[Color] {
        &self.cells
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Color]> {
        self.cells.chunks(self.width)
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        self.rows().map(|r| r.iter().map(|c| c.0).collect()).collect()
    }

    pub fn to_raw(&self) -> RawMatrix {
        RawMatrix::from_rows(self.rows().map(|r| r.iter().map(|c| c.0 as i64).collect()).collect())
    }

    /// True when the grid also satisfies the input-role size bound.
    pub fn fits_input_bounds(&self) -> bool {
        self.height <= MAX_INPUT_SIDE && self.width <= MAX_INPUT_SIDE
    }

    pub fn transpose(&self) -> Grid {
        let mut cells = Vec::with_capacity(self.cells.len());
        for c in 0..self.width {
            for r in 0..self.height {
                cells.push(self.get(r, c));
            }
        }
        Grid { height: self.width, width: self.height, cells }
    }

    /// Quarter turn clockwise.
    pub fn rotate_cw(&self) -> Grid {
        let mut cells = Vec::with_capacity(self.cells.len());
        for c in 0..self.width {
            for r in (0..self.height).rev() {
                cells.push(self.get(r, c));
            }
        }
        Grid { height: self.width, width: self.height, cells }
    }

    pub fn is_all(&self, color: Color) -> bool {
        self.cells.iter().all(|&c| c == color)
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Grid{:?}", self.to_rows())
    }
}

impl Serialize for Grid {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        Grid::from_raw(&RawMatrix::from_json(&value), GridRole::Output)
            .map_err(serde::de::Error::custom)
    }
}

/// Number of distinct colors present in `g`.
pub fn distinct_colors(g: &Grid) -> usize {
    g.cells.iter().collect::<HashSet<_>>().len()
}

/// A bijection on the ten colors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ColorPermutation {
    mapping: [u8; 10],
}

impl ColorPermutation {
    pub fn identity() -> Self {
        ColorPermutation { mapping: [0, 1, 2, 3, 4, 5, 6, 7, 8, 9] }
    }

    /// Returns `None` unless `mapping` is a bijection on 0..=9.
    pub fn from_mapping(mapping: [u8; 10]) -> Option<Self> {
        let mut seen = [false; 10];
        for &m in &mapping {
            if m > 9 || std::mem::replace(&mut seen[m as usize], true) {
                return None;
            }
        }
        Some(ColorPermutation { mapping })
    }

    /// Exchanges two colors and fixes the rest.
    pub fn swap(a: Color, b: Color) -> Self {
        let mut mapping = Self::identity().mapping;
        mapping.swap(a.0 as usize, b.0 as usize);
        ColorPermutation { mapping }
    }

    /// Draws a uniformly random permutation. With `fix_background`, color 0
    /// maps to itself and only 1..=9 are shuffled.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, fix_background: bool) -> Self {
        let mut mapping = Self::identity().mapping;
        if fix_background {
            mapping[1..].shuffle(rng);
        } else {
            mapping.shuffle(rng);
        }
        ColorPermutation { mapping }
    }

    pub fn apply(&self, c: Color) -> Color {
        Color(self.mapping[c.0 as usize])
    }

    pub fn mapping(&self) -> [u8; 10] {
        self.mapping
    }

    pub fn inverse(&self) -> Self {
        let mut mapping = [0u8; 10];
        for (from, &to) in self.mapping.iter().enumerate() {
            mapping[to as usize] = from as u8;
        }
        ColorPermutation { mapping }
    }

    /// The permutation that applies `self` first, then `next`.
    pub fn then(&self, next: &ColorPermutation) -> Self {
        let mut mapping = [0u8; 10];
        for (i, m) in mapping.iter_mut().enumerate() {
            *m = next.mapping[self.mapping[i] as usize];
        }
        ColorPermutation { mapping }
    }

    pub fn fixes(&self, c: Color) -> bool {
        self.mapping[c.0 as usize] == c.0
    }
}

impl fmt::Display for ColorPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let moved: Vec<String> = self
            .mapping
            .iter()
            .enumerate()
            .filter(|(i, &m)| *i as u8 != m)
            .map(|(i, m)| format!("{i}->{m}"))
            .collect();
        if moved.is_empty() {
            f.write_str("identity")
        } else {
            f.write_str(&moved.join(","))
        }
    }
}

pub fn apply_color_permutation(g: &Grid, p: &ColorPermutation) -> Grid {
    Grid {
        height: g.height,
        width: g.width,
        cells: g.cells.iter().map(|&c| p.apply(c)).collect(),
    }
}

/// SHA-256 over the canonical encoding of a grid.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridDigest(pub [u8; 32]);

impl fmt::Debug for GridDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GridDigest({})", hex::encode(&self.0[..8]))
    }
}

impl fmt::Display for GridDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

/// Canonical byte form: height, width, then one byte per cell row-major.
/// Both sides are at most 255 for inputs; larger outputs use a
/// little-endian u32 header so the encoding stays injective.
pub fn canonical_bytes(g: &Grid) -> Vec<u8> {
    let mut out = Vec::with_capacity(g.cells.len() + 8);
    if g.height <= 255 && g.width <= 255 {
        out.push(g.height as u8);
        out.push(g.width as u8);
    } else {
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&(g.height as u32).to_le_bytes());
        out.extend_from_slice(&(g.width as u32).to_le_bytes());
    }
    out.extend(g.cells.iter().map(|c| c.0));
    out
}

pub fn grid_hash(g: &Grid) -> GridDigest {
    GridDigest(Sha256::digest(canonical_bytes(g)).into())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(rows: Vec<Vec<i64>>) -> RawMatrix {
        RawMatrix::from_rows(rows)
    }

    fn g(rows: &[&[u8]]) -> Grid {
        Grid::from_rows(rows).unwrap()
    }

    #[test]
    fn minimal_grid_is_valid_input() {
        assert_eq!(validate_grid(&raw(vec![vec![0]]), GridRole::Input), GridVerdict::Valid);
    }

    #[test]
    fn oversized_input_is_rejected_but_output_is_not() {
        let tall = raw(vec![vec![0; 5]; 31]);
        assert_eq!(
            validate_grid(&tall, GridRole::Input),
            GridVerdict::InvalidSize { height: 31, width: 5 }
        );
        let big = raw(vec![vec![0; 35]; 35]);
        assert_eq!(validate_grid(&big, GridRole::Output), GridVerdict::Valid);
    }

    #[test]
    fn ragged_and_bad_values() {
        assert_eq!(
            validate_grid(&raw(vec![vec![0, 1], vec![2]]), GridRole::Input),
            GridVerdict::Ragged { row: 1 }
        );
        assert_eq!(
            validate_grid(&raw(vec![vec![0, 10]]), GridRole::Input),
            GridVerdict::InvalidValue { row: 0, col: 1 }
        );
        assert_eq!(
            validate_grid(&raw(vec![vec![0, -1]]), GridRole::Output),
            GridVerdict::InvalidValue { row: 0, col: 1 }
        );
        assert_eq!(
            validate_grid(&raw(vec![]), GridRole::Output),
            GridVerdict::InvalidSize { height: 0, width: 0 }
        );
        assert_eq!(
            validate_grid(&raw(vec![vec![]]), GridRole::Output),
            GridVerdict::InvalidSize { height: 1, width: 0 }
        );
    }

    #[test]
    fn json_shapes_that_are_not_matrices() {
        let v: serde_json::Value = serde_json::from_str(r#"[[1, 2], 3]"#).unwrap();
        assert_eq!(validate_grid(&RawMatrix::from_json(&v), GridRole::Input), GridVerdict::Ragged { row: 1 });
        let v: serde_json::Value = serde_json::from_str(r#""grid""#).unwrap();
        assert!(matches!(
            validate_grid(&RawMatrix::from_json(&v), GridRole::Input),
            GridVerdict::InvalidSize { .. }
        ));
        let v: serde_json::Value = serde_json::from_str(r#"[[1, 2.5]]"#).unwrap();
        assert_eq!(
            validate_grid(&RawMatrix::from_json(&v), GridRole::Input),
            GridVerdict::InvalidValue { row: 0, col: 1 }
        );
    }

    #[test]
    fn permutation_examples() {
        let grid = g(&[&[1, 2], &[0, 1]]);
        assert_eq!(apply_color_permutation(&grid, &ColorPermutation::identity()), grid);
        let swap = ColorPermutation::swap(Color(1), Color(2));
        assert_eq!(apply_color_permutation(&grid, &swap), g(&[&[2, 1], &[0, 2]]));
    }

    #[test]
    fn from_mapping_rejects_non_bijections() {
        assert!(ColorPermutation::from_mapping([0, 1, 2, 3, 4, 5, 6, 7, 8, 8]).is_none());
        assert!(ColorPermutation::from_mapping([0, 1, 2, 3, 4, 5, 6, 7, 8, 10]).is_none());
        assert!(ColorPermutation::from_mapping([9, 8, 7, 6, 5, 4, 3, 2, 1, 0]).is_some());
    }

    #[test]
    fn random_permutation_fixes_background_by_default() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            assert!(ColorPermutation::random(&mut rng, true).fixes(Color(0)));
        }
        let moved = (0..200).any(|_| !ColorPermutation::random(&mut rng, false).fixes(Color(0)));
        assert!(moved);
    }

    #[test]
    fn distinct_color_counts() {
        assert_eq!(distinct_colors(&g(&[&[0, 1], &[1, 2]])), 3);
        assert_eq!(distinct_colors(&Grid::filled(3, 4, Color(0))), 1);
        assert_eq!(distinct_colors(&g(&[&[0, 1, 2, 3, 4], &[5, 6, 7, 8, 9]])), 10);
    }

    #[test]
    fn hash_distinguishes_shape() {
        assert_eq!(grid_hash(&g(&[&[1, 2]])), grid_hash(&g(&[&[1, 2]])));
        assert_ne!(grid_hash(&g(&[&[1, 2]])), grid_hash(&g(&[&[1], &[2]])));
        let m = g(&[&[1, 2], &[3, 4]]);
        assert_ne!(grid_hash(&m), grid_hash(&m.transpose()));
    }

    #[test]
    fn large_outputs_hash_injectively() {
        let a = Grid::filled(300, 1, Color(0));
        let b = Grid::filled(1, 300, Color(0));
        assert_ne!(grid_hash(&a), grid_hash(&b));
        assert_ne!(canonical_bytes(&a), canonical_bytes(&b));
    }

    #[test]
    fn rotation_and_transpose() {
        let m = g(&[&[1, 2, 3], &[4, 5, 6]]);
        assert_eq!(m.rotate_cw(), g(&[&[4, 1], &[5, 2], &[6, 3]]));
        assert_eq!(m.transpose(), g(&[&[1, 4], &[2, 5], &[3, 6]]));
        assert_eq!(m.rotate_cw().rotate_cw().rotate_cw().rotate_cw(), m);
    }

    #[test]
    fn grid_json_form() {
        let m = g(&[&[0, 1], &[2, 3]]);
        assert_eq!(serde_json::to_string(&m).unwrap(), "[[0,1],[2,3]]");
        let back: Grid = serde_json::from_str("[[0,1],[2,3]]").unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<Grid>("[[0,1],[2]]").is_err());
    }
}
