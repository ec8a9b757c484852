#include <cstdlib>
#include <iostream>
#include <string>

#include "rvp/verification.hpp"

// Usage: acceptance [criterion ids...]
int main(int argc, char** argv)
{
    rvp::VerifyOptions opt;
    for (int i = 1; i < argc; ++i) opt.criteria.push_back(std::atoi(argv[i]));
    opt.on_result = [](const rvp::CriterionResult& r) { std::cout << rvp::format_result(r) << std::endl; };
    bool all = true;
    for (const auto& r : rvp::run_verification(opt)) all = all && r.passed;
    return all ? 0 : 1;
}
