//! Round-trips an instance through the plain-text fixture format.
//!
//! ```bash
//! cargo run -p rolf --example instance_fixture
//! ```

use std::io::Cursor;

use rolf::env::{generate_instance, instance_to_text, read_instance, FeatureCase, ScenarioConfig};

fn main() -> rolf::Result<()> {
    let inst = generate_instance(&ScenarioConfig::partially_observed(FeatureCase::LatentInObserved, 4))?;
    let text = instance_to_text(&inst);
    let back = read_instance(Cursor::new(text.as_bytes()))?;
    let header = text.lines().next().unwrap_or_default();
    println!("header: {header}");
    println!("{} lines, {} bytes", text.lines().count(), text.len());
    println!("identical after round trip: {}", back == inst);
    println!("optimal arm {}, reward {:.4}, min gap {:.4}", inst.optimal_arm(), inst.optimal_reward(), inst.min_gap());
    Ok(())
}
