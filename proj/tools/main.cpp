#include "simfid/cli.hpp"

int main(int argc, char** argv) { return simfid::dispatch(argc, argv); }
