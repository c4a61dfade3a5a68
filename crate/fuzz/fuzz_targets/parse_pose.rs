#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = parawork_cli::parse_pose(text) {
        assert!(p.z.is_finite() && p.psi.is_finite() && p.theta.is_finite());
    }
});
