#include "gateforge/io.hpp"

int main(int argc, char** argv) {
  return gateforge::run_cli(argc, argv);
}
