//! Small reference programs used by tests and documentation.

/// Counts and prints the even numbers in `1..=n`.
pub const EVEN_JAVA: &str = "\
int main(int n) {
    int count = 0;
    for (int i = 1; i <= n; i = i + 1) {
        if (i % 2 == 0) {
            System.out.println(i);
            count = count + 1;
        }
    }
    return count;
}
";

pub const FACTORIAL_JAVA: &str = "\
int factorial(int n) {
    int result = 1;
    for (int i = 2; i <= n; i = i + 1) {
        result = result * i;
    }
    return result;
}
";

pub const FACTORIAL_PY: &str = "\
def factorial(n):
    result = 1
    for i in range(2, n + 1):
        result = result * i
    return result
";
