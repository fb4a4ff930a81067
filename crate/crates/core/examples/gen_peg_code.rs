//! Regenerates the embedded (3,6)-regular n=1008 parity-check fixture.
//!
//! ```bash
//! cargo run -p mcpnc --example gen_peg_code
//! ```
//!
//! The construction is deterministic for the fixed seed, so the output is
//! byte-identical to `crates/core/fixtures/peg_n1008_m504.alist`.

use mcpnc::coding::{peg_generate, CodeDefinition};

const SEED: u64 = 0xC0DE;

fn main() {
    let rows = peg_generate(1008, 504, 3, SEED);
    let code = CodeDefinition::from_adjacency(rows, 1008).expect("valid adjacency");
    let text = code.to_alist_string();
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/fixtures/peg_n1008_m504.alist"
    );
    std::fs::write(path, &text).expect("write fixture");
    println!(
        "wrote {path}: n={} checks={} rank={} rate={:.4}",
        code.n(),
        code.num_checks(),
        code.rank(),
        code.rate()
    );
}
