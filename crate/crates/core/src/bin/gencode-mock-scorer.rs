//! Test double for the external scorer protocol.
//!
//! Answers each request with `loss = id / 10` when the id is numeric and
//! `loss = ordinal / 10` otherwise.
//!
//!   --die-after N      exit after N responses
//!   --garbage-after N  send a non-JSON line after N responses
//!   --listen ADDR      serve one TCP connection instead of stdio; the bound
//!                      address is printed on the first stdout line

use serde_json::{json, Value};
use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;

fn flag(args: &[String], name: &str) -> Option<String> {
    args.iter().position(|a| a == name).and_then(|i| args.get(i + 1)).cloned()
}

fn serve(input: impl BufRead, mut output: impl Write, die_after: Option<usize>, garbage_after: Option<usize>) {
    for (n, line) in input.lines().enumerate() {
        let Ok(line) = line else { return };
        if die_after == Some(n) {
            std::process::exit(1);
        }
        if garbage_after == Some(n) {
            let _ = writeln!(output, "this is not json");
            let _ = output.flush();
            continue;
        }
        let req: Value = serde_json::from_str(&line).expect("request is JSON");
        let id = req["id"].as_str().unwrap_or_default().to_string();
        let loss = id.parse::<f64>().unwrap_or(n as f64) / 10.0;
        let reply = json!({ "id": id, "loss": loss, "max_prob": (-loss).exp() });
        if writeln!(output, "{reply}").and_then(|_| output.flush()).is_err() {
            return;
        }
    }
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let num = |name| flag(&args, name).map(|v| v.parse::<usize>().expect("numeric flag"));
    let (die, garbage) = (num("--die-after"), num("--garbage-after"));
    match flag(&args, "--listen") {
        Some(addr) => {
            let listener = TcpListener::bind(addr).expect("bind");
            println!("{}", listener.local_addr().expect("local addr"));
            std::io::stdout().flush().expect("stdout");
            let (stream, _) = listener.accept().expect("accept");
            let reader = BufReader::new(stream.try_clone().expect("clone stream"));
            serve(reader, stream, die, garbage);
        }
        None => serve(std::io::stdin().lock(), std::io::stdout().lock(), die, garbage),
    }
}
