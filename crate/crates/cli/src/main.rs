use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rooplpp::syntax::max_constant;
use rooplpp::typing::{check_program_report, find_main};
use rooplpp::{
    build_class_map, invert_program, parse, pretty_print, ClassMap, Direction, HeapConfig, Machine, MachineConfig,
    MemoryImage, Program, WordWidth,
};
use serde_json::json;

const EXIT_RUNTIME: u8 = 1;
const EXIT_TYPE: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_CONFIG: u8 = 4;

/// Interpreter for a reversible object-oriented language with dynamic memory.
#[derive(Parser)]
#[command(name = "rooplpp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, analyse classes and type-check a program.
    Check { file: PathBuf },
    /// Run the main method and print the main object's fields.
    Run(RunArgs),
    /// Print the inverted program.
    Invert { file: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    file: PathBuf,
    /// Number of free lists; the initial heap is one block of 2^N words.
    #[arg(long, value_name = "N")]
    freelists: Option<u32>,
    /// Machine word width.
    #[arg(long, value_name = "BITS", value_parser = ["16", "32", "64"])]
    word_bits: Option<String>,
    /// Words reserved for frames above the heap.
    #[arg(long, value_name = "N", default_value_t = 4096)]
    stack_words: usize,
    /// Append a fresh top-size block when the heap is exhausted (not reversible).
    #[arg(long)]
    heap_grow: bool,
    #[arg(long, value_name = "N", default_value_t = 10_000_000)]
    step_limit: u64,
    /// Run main backwards.
    #[arg(long)]
    reverse: bool,
    /// Print {fields, steps, freelists} as JSON.
    #[arg(long)]
    json: bool,
    /// Append free lists and a hex dump of memory.
    #[arg(long)]
    dump_heap: bool,
    /// Write one JSON record per executed statement to FILE.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    /// Start from a saved state instead of a fresh heap.
    #[arg(long, value_name = "FILE")]
    resume: Option<PathBuf>,
    /// Save the final state to FILE.
    #[arg(long, value_name = "FILE")]
    save_state: Option<PathBuf>,
}

struct Failure(u8);

type Outcome = Result<(), Failure>;

fn fail(code: u8, msg: impl std::fmt::Display) -> Failure {
    eprintln!("{msg}");
    Failure(code)
}

struct Loaded {
    program: Program,
    classes: ClassMap,
    main: String,
}

fn read_source(file: &Path) -> Result<String, Failure> {
    fs::read_to_string(file).map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", file.display())))
}

fn parse_file(file: &Path) -> Result<Program, Failure> {
    let src = read_source(file)?;
    parse(&src).map_err(|e| fail(EXIT_PARSE, format!("{}:{e}", file.display())))
}

fn load(file: &Path) -> Result<Loaded, Failure> {
    let program = parse_file(file)?;
    let name = file.display();
    let classes = build_class_map(&program).map_err(|errs| {
        for e in &errs {
            eprintln!("{name}:{e}");
        }
        Failure(EXIT_TYPE)
    })?;
    let report = check_program_report(&program, &classes);
    for w in &report.warnings {
        eprintln!("{name}:{}: warning: {}", w.span, w.message);
    }
    if !report.errors.is_empty() {
        for e in &report.errors {
            eprintln!("{name}:{e}");
        }
        return Err(Failure(EXIT_TYPE));
    }
    let main = find_main(&program).map_err(|e| fail(EXIT_TYPE, format!("{name}:{e}")))?;
    Ok(Loaded { program, classes, main })
}

fn cmd_check(file: &Path) -> Outcome {
    load(file)?;
    println!("{}: ok", file.display());
    Ok(())
}

fn cmd_invert(file: &Path) -> Outcome {
    let program = parse_file(file)?;
    build_class_map(&program).map_err(|errs| {
        for e in &errs {
            eprintln!("{}:{e}", file.display());
        }
        Failure(EXIT_TYPE)
    })?;
    print!("{}", pretty_print(&invert_program(&program)));
    Ok(())
}

fn heap_config(args: &RunArgs) -> Result<HeapConfig, Failure> {
    let bits: u32 = args.word_bits.as_deref().unwrap_or("32").parse().unwrap_or(32);
    Ok(HeapConfig {
        num_freelists: args.freelists.unwrap_or(10),
        word_width: WordWidth::from_bits(bits)
            .ok_or_else(|| fail(EXIT_CONFIG, format!("unsupported word width {bits}")))?,
        stack_words: args.stack_words,
        grow: args.heap_grow,
    })
}

fn initial_memory(args: &RunArgs, config: &HeapConfig) -> Result<MemoryImage, Failure> {
    let Some(path) = &args.resume else {
        return MemoryImage::new(config).map_err(|e| fail(EXIT_CONFIG, e));
    };
    let bytes = fs::read(path).map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", path.display())))?;
    let mem = MemoryImage::from_bytes(&bytes).map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", path.display())))?;
    if args.freelists.is_some_and(|n| n as usize != mem.num_freelists())
        || args
            .word_bits
            .as_deref()
            .is_some_and(|b| b != mem.width().bits().to_string())
    {
        return Err(fail(
            EXIT_CONFIG,
            format!("{}: heap configuration differs from the saved state", path.display()),
        ));
    }
    Ok(mem)
}

fn cmd_run(args: &RunArgs) -> Outcome {
    let loaded = load(&args.file)?;
    let heap = heap_config(args)?;
    let mem = initial_memory(args, &heap)?;
    let width = mem.width();
    let largest = max_constant(&loaded.program);
    if largest > width.max_value() {
        return Err(fail(
            EXIT_CONFIG,
            format!("constant {largest} does not fit in {}-bit words", width.bits()),
        ));
    }
    let config = MachineConfig {
        heap: HeapConfig {
            num_freelists: mem.num_freelists() as u32,
            word_width: width,
            ..heap
        },
        step_limit: args.step_limit,
        ..MachineConfig::default()
    };
    let dir = if args.reverse {
        Direction::Backward
    } else {
        Direction::Forward
    };
    let resumed = args.resume.is_some();

    let mut machine = Machine::with_memory(&loaded.classes, mem, config.clone());
    if let Some(path) = &args.trace {
        let file = fs::File::create(path).map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", path.display())))?;
        let mut out = BufWriter::new(file);
        machine.set_trace(move |r| {
            let _ = serde_json::to_writer(&mut out, r);
            let _ = out.write_all(b"\n");
        });
    }
    let result = if resumed {
        machine.resume_main(&loaded.main, dir)
    } else {
        machine.run_main(&loaded.main, dir)
    };
    let out = result.map_err(|e| fail(EXIT_RUNTIME, format!("{}:{e}", args.file.display())))?;

    // A backward run from a forward-final state should land on the initial one.
    let restored = args.reverse && {
        let mut fresh = Machine::new(&loaded.classes, config).map_err(|e| fail(EXIT_CONFIG, e))?;
        let main = loaded.classes.get(&loaded.main).expect("main class exists");
        fresh.alloc_main(main).map_err(|e| fail(EXIT_CONFIG, e))?;
        fresh.mem.words() == machine.mem.words()
    };

    if let Some(path) = &args.save_state {
        fs::write(path, machine.mem.to_bytes()).map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", path.display())))?;
    }

    if args.json {
        let fields: serde_json::Map<String, serde_json::Value> =
            out.fields.iter().map(|(n, v)| (n.clone(), json!(v))).collect();
        let freelists = machine.mem.snapshot_free_lists().map(|s| s.lists).unwrap_or_default();
        let mut doc = json!({ "fields": fields, "steps": out.steps, "freelists": freelists });
        if args.reverse {
            doc["restored"] = json!(restored);
        }
        if args.dump_heap {
            doc["heap"] = json!(machine.mem.words());
        }
        println!("{doc}");
    } else {
        for (name, value) in &out.fields {
            println!("{name} = {value}");
        }
        if args.reverse && restored {
            println!("# initial state restored");
        }
        if args.dump_heap {
            println!("\n{}", machine.mem.dump_free_lists());
            print!("{}", machine.mem.hex_dump());
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Outcome {
    match &cli.command {
        Command::Check { file } => cmd_check(file),
        Command::Run(args) => cmd_run(args),
        Command::Invert { file } => cmd_invert(file),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // Deeply recursive object programs need more host stack than the default.
    let worker = std::thread::Builder::new()
        .stack_size(1 << 30)
        .spawn(move || dispatch(cli))
        .expect("spawn interpreter thread");
    match worker.join() {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure(code))) => ExitCode::from(code),
        Err(_) => ExitCode::from(EXIT_RUNTIME),
    }
}
