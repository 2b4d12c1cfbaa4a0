fn main() {
    // dying quietly on a closed pipe (e.g. `finrank schedule ... | head`)
    // beats a broken-pipe panic from println!
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(finrank_cli::cli::run(std::env::args_os()));
}
