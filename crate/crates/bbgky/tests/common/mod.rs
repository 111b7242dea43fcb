#![allow(dead_code)]

use bbgky::{parse_labels, parse_spec};
use bbgky_core::{Single, SystemSpec};

pub const GOLDEN_SYSTEM: &str = "family A B F\ninteract A F\ninteract B F\n";
pub const SYSTEM_1: &str = "single A1\nfamily F\ninteract A1 F\n";
pub const SYSTEM_2: &str = "single A1\nfamily B F\ninteract A1 F\ninteract B F\n";

pub fn spec(text: &str) -> SystemSpec {
    parse_spec(text).unwrap().spec
}

pub fn labels(t: &str) -> Vec<Single> {
    parse_labels(t).unwrap()
}

/// Whitespace-free LaTeX with `\sum_X` written as `\sum_{X}` and sizing
/// commands dropped, so hand-typed and generated terms compare equal.
pub fn normalize_latex(s: &str) -> String {
    let compact: String = s.replace("\\left", "").replace("\\right", "").chars().filter(|c| !c.is_whitespace()).collect();
    let mut out = String::new();
    let mut rest = compact.as_str();
    while let Some(pos) = rest.find("\\sum_") {
        out.push_str(&rest[..pos + 5]);
        rest = &rest[pos + 5..];
        let mut chars = rest.chars();
        if let Some(c) = chars.next().filter(|c| c.is_ascii_uppercase()) {
            out.push('{');
            out.push(c);
            out.push('}');
            rest = chars.as_str();
        }
    }
    out.push_str(rest);
    out
}

/// Hand-transcribed right-hand sides of the reference equations for the
/// golden system, one signed term per entry.
pub fn reference_equations() -> Vec<(&'static str, Vec<&'static str>)> {
    vec![
        ("A1", vec![
            "+ \\sum_{F }  Tr_{F} [  V_{A1F} , \\rho_{A1}\\rho_{F} ]",
            "+ \\sum_{F}  Tr_{F} [  V_{A1F} , g_{A1F} ]",
        ]),
        ("F1", vec![
            "+ \\sum_A  Tr_{A} [  V_{AF1} , \\rho_{F1}\\rho_{A} ]",
            "+ \\sum_A  Tr_{A} [  V_{AF1} , g_{F1A} ]",
            "+ \\sum_B  Tr_{B} [  V_{BF1} , \\rho_{F1}\\rho_{B} ]",
            "+ \\sum_B Tr_{B} [  V_{BF1} , g_{F1B} ]",
        ]),
        ("A1A2", vec![
            "+ \\sum_F Tr_{F} [  V_{A1F} , \\rho_{A1}g_{A2F} ]",
            "+ \\sum_F Tr_{F} [  V_{A1F} , \\rho_{F}g_{A1A2} ]",
            "+ \\sum_F Tr_{F} [  V_{A1F} , g_{A1A2F} ]",
            "+ \\sum_F Tr_{F} [  V_{A2F} , \\rho_{A2}g_{A1F} ]",
            "+ \\sum_F Tr_{F} [  V_{A2F} , \\rho_{F}g_{A1A2} ]",
            "+ \\sum_F Tr_{F} [  V_{A2F} , g_{A1A2F} ]",
        ]),
        ("F1F2", vec![
            "+ \\sum_A  Tr_{A} [  V_{AF1} , \\rho_{F1}g_{F2A} ]",
            "+ \\sum_B Tr_{B} [  V_{BF1} , \\rho_{F1}g_{F2B} ]",
            "+ \\sum_A Tr_{A} [  V_{AF1} , \\rho_{A}g_{F1F2} ]",
            "+ \\sum_A Tr_{A} [  V_{AF1} , g_{F1F2A} ]",
            "+ \\sum_A Tr_{A} [  V_{AF2} , \\rho_{F2}g_{F1A} ]",
            "+ \\sum_A Tr_{A} [  V_{AF2} , \\rho_{A}g_{F1F2} ]",
            "+ \\sum_A  Tr_{A} [  V_{AF2} , g_{F1F2A} ]",
            "+ \\sum_B Tr_{B} [  V_{BF1} , \\rho_{B}g_{F1F2} ]",
            "+ \\sum_B Tr_{B} [  V_{BF1} , g_{F1F2B} ]",
            "+ \\sum_B Tr_{B} [  V_{BF2} , \\rho_{F2}g_{F1B} ]",
            "+ \\sum_B Tr_{B} [  V_{BF2} , \\rho_{B}g_{F1F2} ]",
            "+ \\sum_B Tr_{B} [  V_{BF2} , g_{F1F2B} ]",
        ]),
        ("A1B1", vec![
            "+ \\sum_{F} Tr_{F} [  V_{A1F} , \\rho_{A1}g_{B1F} ]",
            "+ \\sum_{F} Tr_{F} [  V_{A1F} , \\rho_{F}g_{A1B1} ]",
            "+ \\sum_{F}  Tr_{F} [  V_{A1F} , g_{A1B1F} ]",
            "+ \\sum_{F}  Tr_{F} [  V_{B1F} , \\rho_{B1}g_{A1F} ]",
            "+ \\sum_{F}  Tr_{F} [  V_{B1F} , \\rho_{F}g_{A1B1} ]",
            "+ \\sum_{F} Tr_{F} [  V_{B1F} , g_{A1B1F} ]",
        ]),
        ("A1F1", vec![
            "+ \\sum_{A/A1}  Tr_{A} [  V_{AF1} , \\rho_{F1}g_{A1A} ]",
            "+ \\sum_{A/A1}  Tr_{A} [  V_{AF1} , \\rho_{A}g_{A1F1} ]",
            "+ \\sum_{A/A1}  Tr_{A} [  V_{AF1} , g_{A1F1A} ]",
            "+ \\sum_{ F/F1 }  Tr_{F} [  V_{A1F} , \\rho_{A1}g_{F1F} ]",
            "+ \\sum_{F/F1}  Tr_{F} [  V_{A1F} , \\rho_{F}g_{A1F1} ]",
            "+ \\sum_{F/F1}  Tr_{F} [  V_{A1F} , g_{A1F1F} ]",
            "+ \\left[  V_{A1F1} , \\rho_{A1}\\rho_{F1} \\right]",
            "+ \\left[  V_{A1F1} , g_{A1F1} \\right]",
            "+ \\sum_{B} Tr_{B} [  V_{BF1} , \\rho_{F1}g_{A1B} ]",
            "+ \\sum_{B} Tr_{B} [  V_{BF1} , \\rho_{B}g_{A1F1} ]",
            "+ \\sum_{B} Tr_{B} [  V_{BF1} , g_{A1F1B} ]",
            "- \\rho_{F1}Tr_{F1} [  V_{A1F1} , \\rho_{A1}\\rho_{F1} ]",
            "- \\rho_{F1}Tr_{F1} [  V_{A1F1} , g_{A1F1} ]",
            "- \\rho_{A1}Tr_{A1} [  V_{A1F1} , \\rho_{F1}\\rho_{A1} ]",
            "- \\rho_{A1}Tr_{A1} [  V_{A1F1} , g_{F1A1} ]",
        ]),
    ]
}

/// Every target of order 1 to 3 of System 1 and System 2, up to relabelling
/// within a family.
pub fn low_order_targets() -> Vec<(&'static str, &'static str, Vec<&'static str>)> {
    vec![
        ("system 1", SYSTEM_1, vec!["A1", "F1", "A1F1", "F1F2", "A1F1F2", "F1F2F3"]),
        (
            "system 2",
            SYSTEM_2,
            vec![
                "A1", "F1", "B1", "A1F1", "A1B1", "F1F2", "F1B1", "B1B2", "F1F2F3", "F1F2B1", "F1B1B2", "B1B2B3", "A1F1F2",
                "A1F1B1", "A1B1B2",
            ],
        ),
    ]
}

pub const SYSTEM_1_THIRD: [&str; 2] = ["A1F1F2", "F1F2F3"];
pub const SYSTEM_1_FOURTH: [&str; 2] = ["A1F1F2F3", "F1F2F3F4"];
pub const SYSTEM_2_THIRD: [&str; 7] = ["F1F2F3", "F1F2B1", "F1B1B2", "B1B2B3", "A1F1F2", "A1F1B1", "A1B1B2"];
pub const SYSTEM_2_FOURTH: [&str; 9] =
    ["F1F2F3F4", "F1F2F3B1", "F1F2B1B2", "F1B1B2B3", "B1B2B3B4", "A1F1F2F3", "A1F1F2B1", "A1F1B1B2", "A1B1B2B3"];
