use harqstat::phy::LdpcCode;

/// Regenerates the committed code files under codes/. Run manually:
/// cargo test -p harqstat --test scratch -- --ignored regenerate
#[test]
#[ignore]
fn regenerate_shipped_codes() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("codes");
    std::fs::create_dir_all(&dir).unwrap();
    let full = LdpcCode::generate_peg(2400, 600, 3, 1).unwrap();
    full.write_alist(&dir.join("peg_2400_1800.alist")).unwrap();
    let reduced = LdpcCode::generate_peg(1200, 300, 3, 1).unwrap();
    reduced.write_alist(&dir.join("peg_1200_900.alist")).unwrap();
    eprintln!(
        "wrote peg_2400_1800 (k={}), peg_1200_900 (k={})",
        full.info_len(),
        reduced.info_len()
    );
}
