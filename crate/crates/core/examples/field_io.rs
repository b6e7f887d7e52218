//! Field round trip through the CSV format and a few spectral operations.
//!
//! cargo run --release --example field_io

use nnls_lab::io::{field_to_csv_string, read_field_csv};
use nnls_lab::solitons::two_param_soliton;
use nnls_lab::Grid;

fn main() -> nnls_lab::Result<()> {
    let grid = Grid::new(64, 20.0)?;
    let u = two_param_soliton(1.0, 0.9, 0.3, &grid)?;
    let text = field_to_csv_string(&u);
    println!("{}", text.lines().take(4).collect::<Vec<_>>().join("\n"));
    println!("... {} lines", text.lines().count());

    let back = read_field_csv(text.as_bytes())?;
    assert_eq!(back.values(), u.values());
    println!("round trip exact: max diff {}", back.max_abs_diff(&u));

    let (e, o) = u.even_odd_split();
    println!("‖u‖_L2 = {:.6}, ‖u‖_H1 = {:.6}", u.norm_l2(), u.norm_h1());
    println!("even part {:.6}, odd part {:.6}", e.norm_l2(), o.norm_l2());
    println!("tail fraction {:.3e}", u.to_spectral().tail_fraction(0.9));
    Ok(())
}
