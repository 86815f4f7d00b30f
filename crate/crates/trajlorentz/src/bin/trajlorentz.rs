fn main() {
    // Piped output (`trajlorentz eval ... | head`) should end the
    // process the Unix way, not panic on a closed stdout.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(trajlorentz::cli::run());
}
