#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const MAP: &str = "\
*Vertices 4
1 \"SC1\" 0.0 0.0
2 \"SC2\" 1.0 0.0
3 \"SC3\" 0.0 1.0
4 \"SC4\" 1.0 1.0
*Edges
1 2 0.1
1 3 0.3
1 4 0.8
2 3 0.2
2 4 0.1
3 4 0.6
";

// PM1 is G1 doubled, so every method puts them at distance zero.
pub const PROFILES: &str = "\
entity,kind,category,count
G1,group,SC1,4
G1,group,SC2,1
G2,group,SC3,2
G2,group,SC4,5
PM1,panel_member,SC1,8
PM1,panel_member,SC2,2
PM2,panel_member,SC3,1
PM2,panel_member,SC4,1
PM3,panel_member,SC2,3
PM3,panel_member,SC3,1
";

pub struct Fixture {
    pub dir: tempfile::TempDir,
}

impl Fixture {
    pub fn new() -> Self {
        Self::with(MAP, PROFILES)
    }

    pub fn with(map: &str, profiles: &str) -> Self {
        let dir = tempfile::tempdir().expect("temp dir");
        std::fs::write(dir.path().join("map.net"), map).unwrap();
        std::fs::write(dir.path().join("profiles.csv"), profiles).unwrap();
        Self { dir }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, contents).unwrap();
        p
    }

    pub fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
    }

    /// Runs `cogdist <command> --map .. --profiles .. --out <out> <extra>`.
    pub fn run(&self, command: &str, out: &str, extra: &[&str]) -> Output {
        let mut args = vec![
            command.to_string(),
            "--map".into(),
            path_str(&self.path("map.net")),
            "--profiles".into(),
            path_str(&self.path("profiles.csv")),
            "--out".into(),
            path_str(&self.path(out)),
        ];
        args.extend(extra.iter().map(|s| s.to_string()));
        cogdist(&args)
    }
}

pub fn path_str(p: &Path) -> String {
    p.to_str().expect("utf-8 path").to_string()
}

pub fn cogdist<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cogdist"))
        .args(args)
        .output()
        .expect("run cogdist")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}
