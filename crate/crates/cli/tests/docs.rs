//! Every `console` block under `docs/` is re-executed from the workspace root and
//! must reproduce its stdout byte for byte.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

struct Transcript {
    page: PathBuf,
    line: usize,
    args: Vec<String>,
    expected: String,
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

fn transcripts(page: &Path) -> Vec<Transcript> {
    let text = fs::read_to_string(page).unwrap();
    let mut out: Vec<Transcript> = Vec::new();
    let mut in_block = false;
    for (i, line) in text.lines().enumerate() {
        if line.starts_with("```") {
            in_block = !in_block && line == "```console";
            continue;
        }
        if !in_block {
            continue;
        }
        if let Some(cmd) = line.strip_prefix("$ ") {
            let mut words = cmd.split_whitespace().map(String::from);
            assert_eq!(words.next().as_deref(), Some("qdesign"), "{}:{}", page.display(), i + 1);
            out.push(Transcript { page: page.to_path_buf(), line: i + 1, args: words.collect(), expected: String::new() });
        } else {
            let t = out.last_mut().unwrap_or_else(|| panic!("{}:{}: output before any command", page.display(), i + 1));
            t.expected.push_str(line);
            t.expected.push('\n');
        }
    }
    out
}

#[test]
fn docs_transcripts_are_current() {
    let root = workspace_root();
    let mut pages: Vec<PathBuf> = fs::read_dir(root.join("docs"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "md"))
        .collect();
    pages.sort();
    let mut count = 0;
    let mut stale = Vec::new();
    for page in &pages {
        for t in transcripts(page) {
            count += 1;
            let out = Command::new(env!("CARGO_BIN_EXE_qdesign"))
                .args(&t.args)
                .current_dir(&root)
                .env_remove("QDESIGN_WORKERS")
                .output()
                .unwrap();
            let got = String::from_utf8(out.stdout).unwrap();
            if got != t.expected {
                stale.push(format!(
                    "{}:{} `qdesign {}`\n--- expected\n{}--- got\n{}",
                    t.page.display(),
                    t.line,
                    t.args.join(" "),
                    t.expected,
                    got
                ));
            }
        }
    }
    assert!(count >= 10, "only {count} transcripts found");
    assert!(stale.is_empty(), "{} stale transcripts:\n{}", stale.len(), stale.join("\n"));
}

#[test]
fn required_examples_are_documented() {
    let root = workspace_root();
    let decode = fs::read_to_string(root.join("docs/decode.md")).unwrap();
    assert!(decode.contains("$ qdesign decode --q 2 --t 1 --k 2\nD:\n  2 1\n  0 3\nm: 6\nf: -1 2\n"));
    let designs = fs::read_to_string(root.join("docs/designs.md")).unwrap();
    assert!(designs.contains("blocks = 35\ndesign: yes, lambda = 7\n"));
    assert!(designs.contains("blocks = 5\ndesign: yes, lambda = 1\n"));
    let klp = fs::read_to_string(root.join("docs/klp.md")).unwrap();
    assert!(klp.contains("--k 25 --t 1\n") && klp.contains("feasible: true"));
}
