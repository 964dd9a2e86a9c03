#![no_main]
use libfuzzer_sys::fuzz_target;
use scbrauer::dirichlet::DirichletCharacter;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(chi) = DirichletCharacter::parse_label(s) {
        let m = chi.modulus();
        assert_eq!(m % chi.conductor(), 0);
        if let Some(n) = chi.conrey() {
            assert_eq!(DirichletCharacter::from_conrey(m, n).unwrap().images(), chi.images());
        }
        let _ = chi.evaluate(-1);
    }
});
