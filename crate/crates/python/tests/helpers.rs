use ficnull::solvers::Formulation;
use ficnull_py::{matrix_from_rows, matrix_to_rows, parse_formulation};

#[test]
fn rows_round_trip() {
    let rows = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.5]];
    let m = matrix_from_rows(&rows).unwrap();
    assert_eq!((m.rows(), m.cols()), (2, 3));
    assert_eq!(m.get(1, 2), 6.5);
    assert_eq!(matrix_to_rows(&m), rows);
}

#[test]
fn ragged_and_empty_rows_are_rejected() {
    let err = matrix_from_rows(&[vec![1.0, 2.0], vec![3.0]]).unwrap_err().to_string();
    assert!(err.contains("row 1"), "{err}");
    assert!(matrix_from_rows(&[]).is_err());
}

#[test]
fn formulation_tags() {
    assert_eq!(parse_formulation("w_l1_modfid").unwrap(), Formulation::WeightedModFid);
    assert_eq!(parse_formulation("STD_L1").unwrap(), Formulation::StdL1);
    assert!(parse_formulation("L2").is_err());
}
