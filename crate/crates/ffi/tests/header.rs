use std::path::{Path, PathBuf};
use std::process::Command;

fn header_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success())
}

#[test]
fn header_declares_the_api() {
    let text = std::fs::read_to_string(header_dir().join("bayeslogit.h")).unwrap();
    for name in [
        "BL_STATUS_OK",
        "BL_STATUS_EMPTY_CLASS",
        "typedef struct BlDataset BlDataset",
        "bl_dataset_new",
        "bl_generative_posterior",
        "bl_logit_train",
        "bl_compare",
        "bl_last_error_message",
    ] {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    if !have_cc() {
        eprintln!("cc not found; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("t.c");
    std::fs::write(&src, "#include \"bayeslogit.h\"\nint main(void) { return BL_STATUS_OK; }\n").unwrap();
    let st = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header_dir())
        .arg(&src)
        .status()
        .unwrap();
    assert!(st.success());
}

#[test]
fn c_program_links_against_staticlib() {
    // The staticlib sits next to the test binary's deps directory.
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().and_then(Path::parent).map(|d| d.join("libbayeslogit_ffi.a"));
    let Some(lib) = lib.filter(|l| l.exists()) else {
        eprintln!("static library not built; skipping");
        return;
    };
    if !have_cc() {
        eprintln!("cc not found; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe_out = dir.path().join("main");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "bayeslogit.h"
int main(void) {
    double x[] = {-2.0, -1.0, 0.0, 1.0, 2.0, 3.0};
    uint32_t y[] = {1, 1, 1, 2, 2, 2};
    BlDataset *ds = NULL;
    BlGenerativeModel *m = NULL;
    if (bl_dataset_new(x, y, 6, 1, 2, &ds) != BL_STATUS_OK) return 1;
    if (bl_generative_fit_gaussian(ds, BL_VARIANCE_ESTIMATOR_POPULATION, &m) != BL_STATUS_OK) return 2;
    double q = 0.5, p[2];
    if (bl_generative_posterior(m, &q, 1, p, 2) != BL_STATUS_OK) return 3;
    printf("%.6f %.6f\n", p[0], p[1]);
    if (bl_generative_posterior(NULL, &q, 1, p, 2) != BL_STATUS_NULL_POINTER) return 4;
    bl_generative_free(m);
    bl_dataset_free(ds);
    return 0;
}
"#,
    )
    .unwrap();
    let st = Command::new("cc")
        .arg("-I")
        .arg(header_dir())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe_out)
        .status()
        .unwrap();
    assert!(st.success());
    let out = Command::new(&exe_out).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let line = String::from_utf8(out.stdout).unwrap();
    let p: Vec<f64> = line.split_whitespace().map(|t| t.parse().unwrap()).collect();
    assert!((p[0] + p[1] - 1.0).abs() < 1e-6);
}
