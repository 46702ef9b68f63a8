use proptest::prelude::*;
use rooplpp::syntax::{parse, parse_stmt, pretty_print, stmt_to_string, Stmt};
use rooplpp::{build_class_map, check_program, invert_program, invert_stmt};
use rooplpp_testgen::{arbitrary_program, arbitrary_stmt, fixture_with_main, rng, WellTyped};

fn stmt_from_seed(seed: u64) -> Stmt {
    arbitrary_stmt(&mut rng(seed), 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn inversion_is_an_involution(seed in any::<u64>()) {
        let s = stmt_from_seed(seed);
        prop_assert_eq!(invert_stmt(&invert_stmt(&s)), s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn statements_round_trip_through_the_printer(seed in any::<u64>()) {
        let s = stmt_from_seed(seed);
        let text = stmt_to_string(&s);
        let back = parse_stmt(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, s);
    }

    #[test]
    fn programs_round_trip_through_the_printer(seed in any::<u64>()) {
        let p = arbitrary_program(&mut rng(seed));
        let text = pretty_print(&p);
        let back = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(pretty_print(&back), text);
    }

    #[test]
    fn program_inversion_is_an_involution(seed in any::<u64>()) {
        let p = arbitrary_program(&mut rng(seed));
        prop_assert_eq!(invert_program(&invert_program(&p)), p);
    }
}

#[test]
fn inversion_preserves_typing_on_random_programs() {
    for seed in 0..100 {
        let mut g = WellTyped::new(rng(seed ^ 0x5eed));
        let setup = g.setup();
        let body = g.statement(3);
        let src = fixture_with_main(&format!("{setup}\n{body}"));
        let p = parse(&src).unwrap();
        let classes = build_class_map(&p).unwrap();
        check_program(&p, &classes).unwrap_or_else(|e| panic!("seed {seed}: {}", e[0]));
        let inv = invert_program(&p);
        let inv_classes = build_class_map(&inv).unwrap();
        if let Err(errs) = check_program(&inv, &inv_classes) {
            panic!("seed {seed}: inverse rejected: {}\n{}", errs[0], pretty_print(&inv));
        }
    }
}

#[test]
fn inverted_text_reparses_to_the_inverse() {
    for seed in 0..500 {
        let s = stmt_from_seed(seed);
        let inv = invert_stmt(&s);
        assert_eq!(parse_stmt(&stmt_to_string(&inv)).unwrap(), inv, "seed {seed}");
    }
}
