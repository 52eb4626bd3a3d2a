#ifndef SIV_CLI_HPP
#define SIV_CLI_HPP

namespace siv {

// Command line entry point (subcommands rabi, ramsey, pump, raman-rabi,
// raman-ramsey, fit). Returns the process exit code: 0 on success, 1 on
// usage/validation errors, 2 on numerical failures.
int run_cli(int argc, const char* const* argv);

}  // namespace siv

#endif
