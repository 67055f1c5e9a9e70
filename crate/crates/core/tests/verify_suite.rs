use qrws_core::verify;

#[test]
fn every_check_passes() {
    for check in verify::run_all() {
        assert!(check.passed, "{check}");
    }
}
