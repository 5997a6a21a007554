//! Grid validation, color permutations and content hashing.
//!
//! Run with `cargo run --example grid_checks`.

use arcforge::grid::{
    apply_color_permutation, distinct_colors, grid_hash, validate_grid, Color, ColorPermutation, Grid, GridRole,
    RawMatrix,
};

fn main() {
    // Raw matrices come straight from JSON and may be malformed.
    let ragged = RawMatrix::from_rows(vec![vec![1, 2], vec![3]]);
    let bad_value = RawMatrix::from_rows(vec![vec![1, 12]]);
    let wide = RawMatrix::from_rows(vec![vec![1; 31]]);
    println!("ragged:        {:?}", validate_grid(&ragged, GridRole::Input));
    println!("bad value:     {:?}", validate_grid(&bad_value, GridRole::Input));
    println!("31-wide input: {:?}", validate_grid(&wide, GridRole::Input));
    println!("31-wide output:{:?}", validate_grid(&wide, GridRole::Output));

    let g = Grid::from_rows(&[[0u8, 2, 2], [0, 0, 4]]).unwrap();
    let red_to_teal = ColorPermutation::swap(Color::new(2).unwrap(), Color::new(8).unwrap());
    let recolored = apply_color_permutation(&g, &red_to_teal);
    println!("\noriginal  {:?} ({} colors)", g.to_rows(), distinct_colors(&g));
    println!("recolored {:?} ({} colors)", recolored.to_rows(), distinct_colors(&recolored));
    println!("inverse restores: {}", apply_color_permutation(&recolored, &red_to_teal.inverse()) == g);

    // Shape is part of the digest, so [[1, 2]] and [[1], [2]] differ.
    let row = Grid::from_rows(&[[1u8, 2]]).unwrap();
    let col = Grid::from_rows(&[[1u8], [2]]).unwrap();
    println!("\nrow    {}", grid_hash(&row));
    println!("column {}", grid_hash(&col));
}
