#include "cgrp/ioutil.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cgrp/tensor.hpp"

namespace cgrp {

void write_file_atomic(const std::string& path, const std::string& bytes) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    check_arg(out.good(), "cannot open " + tmp + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    check_arg(out.good(), "write failed for " + tmp);
  }
  check_arg(std::rename(tmp.c_str(), path.c_str()) == 0, "cannot move " + tmp + " to " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check_arg(in.good(), "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  check_arg(in.good() || in.eof(), "read failed for " + path);
  return ss.str();
}

}  // namespace cgrp
