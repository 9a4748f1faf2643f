#include "rthkp/atomic_file.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rthkp/errors.hpp"

namespace rthkp::persist {

namespace {

std::atomic<unsigned> temp_counter{0};

class FileDescriptor {
public:
    explicit FileDescriptor(int fd) : fd_(fd) {}
    FileDescriptor(const FileDescriptor&) = delete;
    FileDescriptor& operator=(const FileDescriptor&) = delete;
    ~FileDescriptor() { close(); }

    int get() const noexcept { return fd_; }

    int close() noexcept {
        int rc = 0;
        if (fd_ >= 0) {
            rc = ::close(fd_);
            fd_ = -1;
        }
        return rc;
    }

private:
    int fd_;
};

[[noreturn]] void fail(const std::string& what, const std::filesystem::path& path, int err) {
    throw PersistenceError(what + " " + path.string() + ": " + std::strerror(err));
}

void write_all(int fd, std::string_view bytes, const std::filesystem::path& path) {
    while (!bytes.empty()) {
        const ssize_t n = ::write(fd, bytes.data(), bytes.size());
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            fail("cannot write", path, errno);
        }
        bytes.remove_prefix(static_cast<std::size_t>(n));
    }
}

void sync_directory(const std::filesystem::path& dir) {
    FileDescriptor fd(::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC));
    if (fd.get() >= 0) {
        // Best effort: some filesystems refuse fsync on directories.
        (void)::fsync(fd.get());
    }
}

}  // namespace

void write_file_atomically(const std::filesystem::path& target, std::string_view content,
                           const FaultHook& hook) {
    const auto fire = [&](WriteStage stage) {
        if (hook) {
            hook(stage);
        }
    };
    std::filesystem::path dir = target.parent_path();
    if (dir.empty()) {
        dir = ".";
    }
    const std::filesystem::path temp =
        dir / ("." + target.filename().string() + ".tmp-" + std::to_string(::getpid()) + "-" +
               std::to_string(temp_counter.fetch_add(1)));

    std::error_code ec;
    try {
        fire(WriteStage::BeforeWrite);
    } catch (const std::exception& e) {
        throw PersistenceError(std::string("write of ") + target.string() + " aborted: " + e.what());
    }
    std::filesystem::create_directories(dir, ec);
    FileDescriptor fd(::open(temp.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644));
    if (fd.get() < 0) {
        fail("cannot create", temp, errno);
    }
    try {
        const std::size_t half = content.size() / 2;
        write_all(fd.get(), content.substr(0, half), temp);
        fire(WriteStage::MidWrite);
        write_all(fd.get(), content.substr(half), temp);
        fire(WriteStage::BeforeSync);
        if (::fsync(fd.get()) != 0) {
            fail("cannot flush", temp, errno);
        }
        if (fd.close() != 0) {
            fail("cannot close", temp, errno);
        }
        fire(WriteStage::BeforeRename);
        if (::rename(temp.c_str(), target.c_str()) != 0) {
            fail("cannot rename onto", target, errno);
        }
    } catch (const PersistenceError&) {
        fd.close();
        std::filesystem::remove(temp, ec);
        throw;
    } catch (const std::exception& e) {
        fd.close();
        std::filesystem::remove(temp, ec);
        throw PersistenceError(std::string("write of ") + target.string() + " aborted: " + e.what());
    }
    sync_directory(dir);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw PersistenceError("cannot open " + path.string() + " for reading");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
        throw PersistenceError("cannot read " + path.string());
    }
    return buf.str();
}

}  // namespace rthkp::persist
