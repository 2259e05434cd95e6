#pragma once

// Small hand-built panels and scratch directories shared by the test suites.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include <cvl/panel.hpp>

namespace fixture {

using namespace cvl;

// Random raw panel: T dates, J firms, C characteristics, 3 groups, one control.
inline CharacteristicPanel random_panel(Index nt, Index nj, Index nc, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> grp(0, 2);
    CharacteristicPanel p;
    const std::chrono::sys_days start = std::chrono::year{2021} / 1 / 1;
    for (Index t = 0; t < nt; ++t) {
        const std::chrono::year_month_day d{start + std::chrono::days{t}};
        char buf[32];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                      static_cast<unsigned>(d.day()));
        p.dates.push_back(buf);
    }
    for (Index j = 0; j < nj; ++j) p.firms.push_back("F" + std::to_string(100 + j));
    for (Index c = 0; c < nc; ++c) p.characteristic_names.push_back("x" + std::to_string(c));
    p.control_names = {"size"};
    p.available = Mask::Constant(nt, nj, true);
    p.groups = GroupMatrix(nt, nj);
    p.returns = RealMatrix(nt, nj);
    for (Index t = 0; t < nt; ++t) {
        RealMatrix x(nj, nc), k(nj, 1);
        for (Index j = 0; j < nj; ++j) {
            for (Index c = 0; c < nc; ++c) x(j, c) = 3.0 + 2.0 * g(rng);
            k(j, 0) = g(rng);
            p.groups(t, j) = grp(rng);
            p.returns(t, j) = 0.01 * g(rng);
        }
        p.characteristics.push_back(x);
        p.controls.push_back(k);
    }
    return p;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name)
        : path(std::filesystem::temp_directory_path() / ("cvl_test_" + name + "_" + std::to_string(::getpid())))
    {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

} // namespace fixture
