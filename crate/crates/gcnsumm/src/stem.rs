//! Porter stemmer (the 1980 algorithm, matching the reference C version
//! including the `abli -> able` and `logi -> log` rules). Used by the ROUGE
//! scorer when stemming is enabled.

/// Stems a single lowercase ASCII word. Words of length <= 2 or containing
/// anything other than ASCII lowercase letters are returned unchanged.
pub fn porter_stem(word: &str) -> String {
    if word.len() <= 2 || !word.bytes().all(|b| b.is_ascii_lowercase()) {
        return word.to_string();
    }
    let mut s = Stemmer {
        b: word.as_bytes().to_vec(),
    };
    s.step1a();
    s.step1b();
    s.step1c();
    s.step2();
    s.step3();
    s.step4();
    s.step5a();
    s.step5b();
    String::from_utf8(s.b).expect("ascii buffer")
}

struct Stemmer {
    b: Vec<u8>,
}

impl Stemmer {
    fn is_cons(&self, i: usize) -> bool {
        match self.b[i] {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => i == 0 || !self.is_cons(i - 1),
            _ => true,
        }
    }

    /// Number of vowel-consonant sequences in b[..n].
    fn measure(&self, n: usize) -> usize {
        let mut m = 0;
        let mut i = 0;
        while i < n && self.is_cons(i) {
            i += 1;
        }
        loop {
            while i < n && !self.is_cons(i) {
                i += 1;
            }
            if i >= n {
                return m;
            }
            while i < n && self.is_cons(i) {
                i += 1;
            }
            m += 1;
            if i >= n {
                return m;
            }
        }
    }

    fn has_vowel(&self, n: usize) -> bool {
        (0..n).any(|i| !self.is_cons(i))
    }

    fn ends_double_cons(&self) -> bool {
        let n = self.b.len();
        n >= 2 && self.b[n - 1] == self.b[n - 2] && self.is_cons(n - 1)
    }

    /// consonant-vowel-consonant ending where the final consonant is not
    /// w, x or y; gates the "add e" restorations.
    fn cvc(&self, n: usize) -> bool {
        if n < 3 || !self.is_cons(n - 1) || self.is_cons(n - 2) || !self.is_cons(n - 3) {
            return false;
        }
        !matches!(self.b[n - 1], b'w' | b'x' | b'y')
    }

    fn ends(&self, suffix: &str) -> bool {
        self.b.ends_with(suffix.as_bytes())
    }

    fn truncate(&mut self, by: usize) {
        let n = self.b.len() - by;
        self.b.truncate(n);
    }

    /// Replaces `suffix` by `replacement` when the remaining stem has
    /// measure > `min_measure`. Returns true when the suffix matched,
    /// whether or not the rule fired (per step, only the longest matching
    /// suffix is considered).
    fn replace(&mut self, suffix: &str, replacement: &str, min_measure: usize) -> bool {
        if !self.ends(suffix) {
            return false;
        }
        let stem = self.b.len() - suffix.len();
        if self.measure(stem) > min_measure {
            self.b.truncate(stem);
            self.b.extend_from_slice(replacement.as_bytes());
        }
        true
    }

    fn step1a(&mut self) {
        if self.ends("sses") || self.ends("ies") {
            self.truncate(2); // sses -> ss, ies -> i
        } else if self.ends("ss") {
            // unchanged
        } else if self.ends("s") {
            self.truncate(1);
        }
    }

    fn step1b(&mut self) {
        if self.ends("eed") {
            if self.measure(self.b.len() - 3) > 0 {
                self.truncate(1);
            }
            return;
        }
        let stripped = if self.ends("ed") && self.has_vowel(self.b.len() - 2) {
            self.truncate(2);
            true
        } else if self.ends("ing") && self.has_vowel(self.b.len() - 3) {
            self.truncate(3);
            true
        } else {
            false
        };
        if !stripped {
            return;
        }
        if self.ends("at") || self.ends("bl") || self.ends("iz") {
            self.b.push(b'e');
        } else if self.ends_double_cons() && !matches!(self.b[self.b.len() - 1], b'l' | b's' | b'z')
        {
            self.truncate(1);
        } else if self.measure(self.b.len()) == 1 && self.cvc(self.b.len()) {
            self.b.push(b'e');
        }
    }

    fn step1c(&mut self) {
        if self.ends("y") && self.has_vowel(self.b.len() - 1) {
            let n = self.b.len();
            self.b[n - 1] = b'i';
        }
    }

    fn step2(&mut self) {
        // longest suffix first; a match consumes the step
        const RULES: &[(&str, &str)] = &[
            ("ational", "ate"),
            ("ization", "ize"),
            ("iveness", "ive"),
            ("fulness", "ful"),
            ("ousness", "ous"),
            ("tional", "tion"),
            ("biliti", "ble"),
            ("entli", "ent"),
            ("ousli", "ous"),
            ("ation", "ate"),
            ("alism", "al"),
            ("aliti", "al"),
            ("iviti", "ive"),
            ("enci", "ence"),
            ("anci", "ance"),
            ("izer", "ize"),
            ("abli", "able"),
            ("alli", "al"),
            ("ator", "ate"),
            ("logi", "log"),
            ("eli", "e"),
        ];
        for (suffix, repl) in RULES {
            if self.replace(suffix, repl, 0) {
                return;
            }
        }
    }

    fn step3(&mut self) {
        const RULES: &[(&str, &str)] = &[
            ("icate", "ic"),
            ("ative", ""),
            ("alize", "al"),
            ("iciti", "ic"),
            ("ical", "ic"),
            ("ness", ""),
            ("ful", ""),
        ];
        for (suffix, repl) in RULES {
            if self.replace(suffix, repl, 0) {
                return;
            }
        }
    }

    fn step4(&mut self) {
        const SUFFIXES: &[&str] = &[
            "ement", "ance", "ence", "able", "ible", "ment", "ant", "ent", "ion", "ism", "ate",
            "iti", "ous", "ive", "ize", "al", "er", "ic", "ou",
        ];
        for suffix in SUFFIXES {
            if !self.ends(suffix) {
                continue;
            }
            let stem = self.b.len() - suffix.len();
            let fires = self.measure(stem) > 1
                && (*suffix != "ion" || (stem > 0 && matches!(self.b[stem - 1], b's' | b't')));
            if fires {
                self.b.truncate(stem);
            }
            return;
        }
    }

    fn step5a(&mut self) {
        if !self.ends("e") {
            return;
        }
        let stem = self.b.len() - 1;
        let m = self.measure(stem);
        if m > 1 || (m == 1 && !self.cvc(stem)) {
            self.truncate(1);
        }
    }

    fn step5b(&mut self) {
        if self.measure(self.b.len()) > 1
            && self.ends_double_cons()
            && self.b[self.b.len() - 1] == b'l'
        {
            self.truncate(1);
        }
    }
}
