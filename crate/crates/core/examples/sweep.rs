//! A small β sweep of the lower-bound scenario on a worker pool.
//!
//! NNLS_LAB_WORKERS=2 cargo run --release --example sweep

use nnls_lab::experiments::{run_sweep, SweepConfig};

fn main() -> nnls_lab::Result<()> {
    let out = std::env::temp_dir().join("nnls-sweep");
    let text = format!(
        r#"{{
            "version": 1,
            "base": {{
                "version": 1,
                "scenario": "lower_bound",
                "params": {{ "t_window": 10.0 }},
                "output_dir": "unused",
                "acceptance": {{ "ratio_min": {{ "min": 0.1 }}, "ratio_max": {{ "max": 10.0 }} }}
            }},
            "axes": [
                {{ "pointer": "/params/beta", "values": [0.9, 0.95, 0.99] }},
                {{ "pointer": "/params/alpha", "values": [1.0, 0.98] }}
            ],
            "output_dir": {:?}
        }}"#,
        out
    );
    let cfg = SweepConfig::from_json(&text)?;
    let report = run_sweep(&cfg)?;
    print!("{}", report.summary());
    println!("{}", std::fs::read_to_string(out.join("aggregate.csv"))?);
    Ok(())
}
