use kahler_lab::parse_config;
use kahler_lab::table::{format_row, read_table, COLUMNS};
use proptest::prelude::*;

fn header() -> String {
    COLUMNS.join(",")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_text_is_a_fixed_point(
        seed in 0u64..1000,
        dim in 1usize..=2,
        res in 4usize..=64,
        dt in 1e-4f64..0.5,
        amp in -0.3f64..0.3,
        every in 0usize..10,
    ) {
        let text = format!(
            "seed = {seed}\ngeometry.model = bump\ngeometry.dim = {dim}\ngeometry.resolution = {res}\n\
             geometry.amplitude = {amp}\nflow.dt = {dt}\nflow.t_end = {}\ndiagnostics.entropy_every = {every}\n",
            dt * 3.0
        );
        let cfg = parse_config(&text).unwrap();
        let again = parse_config(&cfg.canonical()).unwrap();
        prop_assert_eq!(&cfg, &again);
        prop_assert_eq!(cfg.hash(), again.hash());
    }

    #[test]
    fn rows_read_back_bit_exactly(cells in proptest::collection::vec(proptest::option::of(any::<f64>().prop_filter("finite", |v| v.is_finite())), 20)) {
        let mut row = [None; 20];
        row.copy_from_slice(&cells);
        let text = format!("{}\n{}\n", header(), format_row(&row));
        let t = read_table(&text).unwrap();
        prop_assert_eq!(t.rows.len(), 1);
        for (a, b) in t.rows[0].iter().zip(&row) {
            prop_assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
        }
    }
}
