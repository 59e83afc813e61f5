#include "commands.hpp"

int main(int argc, char** argv) { return tcmpc::app::dispatch(argc, argv); }
