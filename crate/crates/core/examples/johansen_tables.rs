//! Regenerates the asymptotic trace / max-eigenvalue tables embedded in
//! `src/johansen/tables.rs`.
//!
//!     cargo run --release --example johansen_tables -- [reps] [steps] [cases]
//!
//! Prints Rust array literals on stdout; progress goes to stderr.

use lopcoint::johansen::{simulate_asymptotic, JohansenCase, MAX_DIMENSION};

fn summarize(mut xs: Vec<f64>) -> [f64; 5] {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    xs.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (xs.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        xs[lo] + (xs[hi] - xs[lo]) * (pos - lo as f64)
    };
    [mean, var, q(0.90), q(0.95), q(0.99)]
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let reps: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let steps: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1_000);
    let cases: Vec<u8> = args
        .get(3)
        .map(|s| s.split(',').filter_map(|c| c.parse().ok()).collect())
        .unwrap_or_else(|| vec![1, 2, 3, 4, 5]);
    let max_m: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(MAX_DIMENSION);
    let seed = 20_240_601;
    let mut trace = Vec::new();
    let mut maxeig = Vec::new();
    for &c in &cases {
        let case = JohansenCase::from_number(c).expect("case");
        let mut t_rows = Vec::new();
        let mut m_rows = Vec::new();
        for m in 1..=max_m {
            let draws = simulate_asymptotic(case, m, reps, steps, seed).expect("simulation");
            t_rows.push(summarize(draws.iter().map(|d| d.0).collect()));
            m_rows.push(summarize(draws.iter().map(|d| d.1).collect()));
            eprintln!("case {c} m {m}: trace q95 {:.4} maxeig q95 {:.4}", t_rows[m - 1][3], m_rows[m - 1][3]);
        }
        trace.push(t_rows);
        maxeig.push(m_rows);
    }
    for (name, table) in [("TRACE", &trace), ("MAX_EIGEN", &maxeig)] {
        println!("#[rustfmt::skip]");
        println!("const {name}: [[[f64; 5]; MAX_DIMENSION]; 5] = [");
        for (ci, rows) in table.iter().enumerate() {
            println!("    // case {}", cases[ci]);
            println!("    [");
            for r in rows {
                println!(
                    "        [{:.6}, {:.6}, {:.6}, {:.6}, {:.6}],",
                    r[0], r[1], r[2], r[3], r[4]
                );
            }
            println!("    ],");
        }
        println!("];");
    }
}
