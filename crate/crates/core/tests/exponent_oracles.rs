use fpl_core::exponent::{
    constants, eval_word, max_c_type_i, parse_word, search_max_c, type_i_exponent, ExponentPair, TypeIConstraint,
};
use fpl_core::Rational;

fn pair(k: (i64, i64), l: (i64, i64)) -> ExponentPair {
    ExponentPair::new(Rational::new(k.0, k.1), Rational::new(l.0, l.1))
}

#[test]
fn exponent_at_c_two_is_below_theta() {
    let e = type_i_exponent(&pair((33, 1550), (698, 775)), &Rational::integer(2), &TypeIConstraint::standard());
    assert_eq!(e, Rational::new(81351019, 82647116));
    assert!(e < constants::theta());
}

#[test]
fn short_word_gives_weaker_threshold() {
    let c = max_c_type_i(&pair((1, 6), (2, 3)), &TypeIConstraint::standard()).unwrap();
    assert_eq!(c, Rational::new(903046, 666509));
    assert!(c < constants::c_max());
}

#[test]
fn best_word_up_to_length_eight() {
    let r = search_max_c(&TypeIConstraint::standard(), 8).unwrap();
    assert_eq!(r.word.to_string(), "AAABAAB");
    assert_eq!(r.pair, pair((1, 42), (25, 28)));
    assert_eq!(r.value, Rational::new(10910559, 5332072));
}

#[test]
fn best_word_up_to_length_sixteen_reaches_known_threshold() {
    let r = search_max_c(&TypeIConstraint::standard(), 16).unwrap();
    assert_eq!(r.word.to_string(), "AAABABABABABAAB");
    assert_eq!(r.pair, pair((33, 1550), (698, 775)));
    assert_eq!(r.value, Rational::new(4109054, 1999527));
    // ABAB(0,1) and AAB(0,1) coincide, so the 16-letter word has a 15-letter twin
    assert_eq!(eval_word(&parse_word("A^3BABABABABABAB").unwrap()), r.pair);
}

#[test]
fn decimal_rendering_of_threshold() {
    assert_eq!(constants::c_max().to_decimal(6), "2.055013");
    assert_eq!(constants::c_max().to_decimal(7), "2.0550130");
}
