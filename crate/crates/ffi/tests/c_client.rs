//! Compiles a C program against the generated header and links it with the
//! static library.

use std::path::PathBuf;
use std::process::Command;

const CLIENT: &str = r#"
#include <stdio.h>
#include <string.h>
#include "synrec.h"

int main(void) {
    SynrecProgram *p = NULL;
    const char *src = "int f(int x) { return x + ??; } harness void h(int x) { assert(f(x) == x + 3); }";
    if (synrec_program_parse(src, NULL, &p) != SYNREC_STATUS_OK) { puts(synrec_last_error()); return 1; }
    SynrecConfig *cfg = synrec_config_new();
    synrec_config_set_input_depth(cfg, 2);
    SynrecResult *r = NULL;
    if (synrec_synthesize(p, cfg, &r) != SYNREC_STATUS_OK) return 2;
    if (synrec_result_status(r) != SYNREC_STATUS_OK) return 3;
    if (!strstr(synrec_result_solution(r), "x + 3")) return 4;
    SynrecProgram *q = NULL;
    if (synrec_program_parse("int f( {", NULL, &q) != SYNREC_STATUS_PARSE_ERROR || q != NULL) return 5;
    synrec_result_free(r);
    synrec_config_free(cfg);
    synrec_program_free(p);
    puts("ok");
    return 0;
}
"#;

#[test]
fn c_client_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<test> -> target/<profile>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libsynrec_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("client.c");
    let exe = dir.path().join("client");
    std::fs::write(&c, CLIENT).unwrap();
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&c)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "client exited with {:?}: {}", out.status, String::from_utf8_lossy(&out.stdout));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
