//! The command-line interface driven in-process.

use ivpoly::cli::run_captured;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

/// `(arguments, exit code, stdout)` for each invocation.
pub fn run_example() -> Vec<(String, i32, String)> {
    let minneapolis = format!("{FIXTURES}/minneapolis.csv");
    let incompatible = format!("{FIXTURES}/incompatible.csv");
    let invocations: Vec<Vec<String>> = vec![
        vec!["falsify".into(), incompatible],
        vec![
            "bounds".into(),
            minneapolis.clone(),
            "-f".into(),
            "ate(Separate,Arrest,2)".into(),
        ],
        vec![
            "--format".into(),
            "csv".into(),
            "bounds".into(),
            minneapolis,
            "--drop-z".into(),
            "Separate".into(),
            "-f".into(),
            "ate(Adv,Arr,2)".into(),
        ],
        vec![
            "matrices".into(),
            "-k".into(),
            "2".into(),
            "-m".into(),
            "3".into(),
        ],
        vec![
            "--format".into(),
            "json".into(),
            "simulate".into(),
            "-q".into(),
            "3".into(),
            "--draws".into(),
            "500".into(),
        ],
    ];
    let mut out = Vec::new();
    for args in invocations {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, stdout, _) = run_captured(&refs);
        let shown = args.join(" ");
        println!("$ ivpoly {shown}   # exit {code}");
        for line in stdout.lines().take(6) {
            println!("{line}");
        }
        out.push((shown, code, stdout));
    }
    out
}

fn main() {
    run_example();
}
