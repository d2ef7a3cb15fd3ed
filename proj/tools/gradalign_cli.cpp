#include "gradalign/cli.hpp"

int main(int argc, char** argv) {
  return gradalign::cli_main({argv + 1, argv + argc});
}
